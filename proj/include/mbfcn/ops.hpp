/* Copyright 2026 The MB-FCN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbfcn/tensor.hpp"

namespace mbfcn {

// Records forward operations and replays their adjoints in reverse.
//
// Intermediates created through the tape are owned by it and stay at a
// stable address until clear(). Tensors passed in from outside (images,
// parameters) are referenced, never copied; their gradients accumulate.
// A tape constructed with recording = false still owns intermediates but
// registers no adjoints, which is what inference uses.
template <typename T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  BasicTensor<T>& make(Shape shape, bool needs_grad);
  void record(std::function<void()> adjoint);

  // Seeds d(loss) = seed and runs every adjoint in reverse order. Gradients
  // of tape-owned intermediates are reset first, so calling backward twice
  // accumulates exactly twice into external tensors.
  void backward(BasicTensor<T>& loss, T seed = T(1));

  std::size_t op_count() const { return adjoints_.size(); }
  void clear();

  // Free-form instrumentation counters ("conv2d", "backbone.pass", ...).
  void count(std::string_view key, std::size_t n = 1);
  std::size_t counter(std::string_view key) const;

  // When enabled, piecewise-linear ops (relu, max_pool2d) fold their active
  // pattern into a signature. Two evaluations with equal signatures lie on
  // the same linear piece, which finite-difference checks rely on.
  void set_trace_kinks(bool on) { trace_kinks_ = on; }
  bool trace_kinks() const { return trace_kinks_; }
  void note_kinks(std::uint64_t pattern) { kink_signature_ = (kink_signature_ ^ pattern) * 0x100000001B3ULL; }
  std::uint64_t kink_signature() const { return kink_signature_; }

 private:
  bool recording_;
  bool trace_kinks_ = false;
  std::uint64_t kink_signature_ = 0xCBF29CE484222325ULL;
  std::deque<BasicTensor<T>> owned_;
  std::vector<std::function<void()>> adjoints_;
  std::map<std::string, std::size_t, std::less<>> counters_;
};

struct ConvGeom {
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t dilation = 1;
};

std::size_t conv_out_size(std::size_t in, std::size_t k, const ConvGeom& g);

// Cross-correlation. weight is (c_out, c_in, kh, kw); bias holds c_out values.
template <typename T>
BasicTensor<T>& conv2d(Tape<T>& tape, BasicTensor<T>& input, BasicTensor<T>& weight,
                       BasicTensor<T>& bias, const ConvGeom& geom);

template <typename T>
BasicTensor<T>& relu(Tape<T>& tape, BasicTensor<T>& input);

// Windowed maximum; ties resolve to the first position in row-major order.
template <typename T>
BasicTensor<T>& max_pool2d(Tape<T>& tape, BasicTensor<T>& input, std::size_t k,
                           std::size_t stride);

// Fixed bilinear interpolation kernel for up-sampling by f, shape (1, 1, k, k)
// with k = 2f - f mod 2.
template <typename T>
BasicTensor<T> bilinear_filler(std::size_t f);

// Per-channel transposed convolution with the bilinear filler, stride f and
// padding ceil((k - f) / 2). Output is exactly f times the input size.
// Gradient flows to the input only.
template <typename T>
BasicTensor<T>& bilinear_upsample(Tape<T>& tape, BasicTensor<T>& input, std::size_t f);
template <typename T>
BasicTensor<T>& bilinear_upsample(Tape<T>& tape, BasicTensor<T>& input,
                                  const BasicTensor<T>& filler, std::size_t f);

template <typename T>
BasicTensor<T>& concat_channels(Tape<T>& tape, std::span<BasicTensor<T>* const> inputs);

// Softmax over channel pairs (2a, 2a+1) at every spatial position.
template <typename T>
BasicTensor<T>& softmax_pair(Tape<T>& tape, BasicTensor<T>& logits);

// Scalar reductions, mostly for tests and gradient checks.
template <typename T>
BasicTensor<T>& sum(Tape<T>& tape, BasicTensor<T>& input);
template <typename T>
BasicTensor<T>& weighted_sum(Tape<T>& tape, BasicTensor<T>& input, std::span<const T> weights);

// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v.
template <typename T>
void sgd_step(std::span<BasicTensor<T>* const> params, std::span<BasicTensor<T>> velocity, T lr,
              T momentum, T weight_decay);

}  // namespace mbfcn
