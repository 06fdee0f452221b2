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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbfcn/ops.hpp"
#include "mbfcn/tensor.hpp"

namespace mbfcn {

// Backbone stage outputs.
enum class Stage : int { C2 = 0, C3 = 1, C4 = 2, C5 = 3 };

inline constexpr std::array<std::size_t, 4> kStageStride = {4, 8, 16, 16};
inline constexpr std::size_t kInputMultiple = 16;

inline std::size_t stage_stride(Stage s) { return kStageStride[static_cast<std::size_t>(s)]; }
std::string stage_name(Stage s);

enum class InitScheme {
  gaussian,  // N(0, 0.01^2) everywhere
  he,        // backbone N(0, 2 / fan_in); heads N(0, 0.01^2)
};

struct BackboneConfig {
  std::array<std::size_t, 4> widths = {16, 32, 64, 64};
  std::size_t convs_per_stage = 2;
  std::size_t kernel = 3;
  InitScheme init = InitScheme::he;

  bool operator==(const BackboneConfig&) const = default;
};

struct BranchConfig {
  std::vector<Stage> sources;
  std::size_t target_stride = 16;
  std::size_t head_dim = 64;
  std::vector<double> anchor_sizes;
  std::vector<double> anchor_ratios = {1.0};

  std::size_t anchors_per_cell() const { return anchor_sizes.size() * anchor_ratios.size(); }
  // CX(Y) label, e.g. "C345(8)".
  std::string name() const;
  bool operator==(const BranchConfig&) const = default;
};

struct ModelConfig {
  BackboneConfig backbone;
  std::vector<BranchConfig> branches;

  // Two branches: C345 at stride 8 for small faces, C45 at stride 16.
  static ModelConfig default_two_branch();
  // Throws ConfigError describing the first violated constraint.
  void validate() const;
  // Branch labels joined with '-', e.g. "C345(8)-C45(16)".
  std::string name() const;
  // Smallest side multiple that keeps every branch map an exact divisor.
  std::size_t input_multiple() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct ModelParams {
  struct Entry {
    BasicTensor<T> tensor;
    bool trainable = true;
  };
  std::map<std::string, Entry> entries;

  BasicTensor<T>& at(const std::string& name);
  const BasicTensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries.count(name) != 0; }
  // Trainable tensors in name order.
  std::vector<BasicTensor<T>*> trainable();
  void enable_grad();
  void zero_grad();
  std::size_t parameter_count() const;
};

template <typename T>
ModelParams<T> build_model(const ModelConfig& config, std::uint64_t seed);

// Checks that params hold every tensor the config references, with the
// expected shapes.
template <typename T>
void check_params(const ModelConfig& config, const ModelParams<T>& params);

template <typename T>
struct FeatureMaps {
  std::array<BasicTensor<T>*, 4> maps{};
  BasicTensor<T>& operator[](Stage s) const { return *maps[static_cast<std::size_t>(s)]; }
};

template <typename T>
struct HeadOutput {
  BasicTensor<T>* cls = nullptr;  // (n, 2A, h, w): (background, face) per slot
  BasicTensor<T>* reg = nullptr;  // (n, 4A, h, w)
};

// Runs the shared backbone once. Image sides must be multiples of 16.
template <typename T>
FeatureMaps<T> extract_features(Tape<T>& tape, BasicTensor<T>& image, const BackboneConfig& config,
                                ModelParams<T>& params);

// Resamples each source to the branch stride and concatenates C2..C5.
template <typename T>
BasicTensor<T>& fuse_branch(Tape<T>& tape, const FeatureMaps<T>& features,
                            const BranchConfig& branch, ModelParams<T>& params);

template <typename T>
HeadOutput<T> branch_head(Tape<T>& tape, BasicTensor<T>& fused, const BranchConfig& branch,
                          std::size_t branch_index, ModelParams<T>& params);

template <typename T>
std::vector<HeadOutput<T>> forward(Tape<T>& tape, BasicTensor<T>& image, const ModelConfig& config,
                                   ModelParams<T>& params);

// Parameter conversion between precisions (used by gradient checks).
template <typename To, typename From>
ModelParams<To> params_cast(const ModelParams<From>& src) {
  ModelParams<To> out;
  for (const auto& [name, e] : src.entries) {
    out.entries[name] = {tensor_cast<To>(e.tensor), e.trainable};
  }
  return out;
}

}  // namespace mbfcn
