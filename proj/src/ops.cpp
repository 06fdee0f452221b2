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
#include "mbfcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>

#include "mbfcn/error.hpp"
#include "mbfcn/simd/kernels.hpp"

namespace mbfcn {

using std::ptrdiff_t;
using std::size_t;

// ---------------------------------------------------------------------------
// Tape

template <typename T>
BasicTensor<T>& Tape<T>::make(Shape shape, bool needs_grad) {
  BasicTensor<T>& t = owned_.emplace_back(shape);
  if (needs_grad && recording_) t.enable_grad();
  return t;
}

template <typename T>
void Tape<T>::record(std::function<void()> adjoint) {
  if (recording_) adjoints_.push_back(std::move(adjoint));
}

template <typename T>
void Tape<T>::backward(BasicTensor<T>& loss, T seed) {
  if (adjoints_.empty()) {
    throw StateError("backward called before any differentiable forward operation was recorded");
  }
  if (!loss.requires_grad() || loss.size() != 1) {
    throw StateError("backward requires a scalar output produced by this tape; got shape " +
                     loss.shape().str());
  }
  for (auto& t : owned_) t.zero_grad();
  loss.grad()[0] = seed;
  for (auto it = adjoints_.rbegin(); it != adjoints_.rend(); ++it) (*it)();
}

template <typename T>
void Tape<T>::clear() {
  adjoints_.clear();
  owned_.clear();
  counters_.clear();
  kink_signature_ = 0xCBF29CE484222325ULL;
}

template <typename T>
void Tape<T>::count(std::string_view key, size_t n) {
  auto it = counters_.find(key);
  if (it == counters_.end()) {
    counters_.emplace(std::string(key), n);
  } else {
    it->second += n;
  }
}

template <typename T>
size_t Tape<T>::counter(std::string_view key) const {
  auto it = counters_.find(key);
  return it == counters_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Convolution

size_t conv_out_size(size_t in, size_t k, const ConvGeom& g) {
  const ptrdiff_t span = static_cast<ptrdiff_t>(g.dilation * (k - 1) + 1);
  const ptrdiff_t padded = static_cast<ptrdiff_t>(in + 2 * g.pad);
  if (padded < span) return 0;
  return static_cast<size_t>((padded - span) / static_cast<ptrdiff_t>(g.stride)) + 1;
}

namespace {

struct ConvPlan {
  size_t n, ci, h, w, co, kh, kw, oh, ow;
  ConvGeom g;
  size_t patch() const { return ci * kh * kw; }
  size_t pixels() const { return oh * ow; }
  bool direct() const { return kh == 1 && kw == 1 && g.stride == 1 && g.pad == 0; }
};

template <typename T>
void im2col(const ConvPlan& p, const T* img, T* col) {
  const size_t np = p.pixels();
  for (size_t c = 0; c < p.ci; ++c) {
    for (size_t ky = 0; ky < p.kh; ++ky) {
      for (size_t kx = 0; kx < p.kw; ++kx) {
        T* row = col + ((c * p.kh + ky) * p.kw + kx) * np;
        const T* plane = img + c * p.h * p.w;
        for (size_t oy = 0; oy < p.oh; ++oy) {
          const ptrdiff_t iy = static_cast<ptrdiff_t>(oy * p.g.stride + ky * p.g.dilation) -
                               static_cast<ptrdiff_t>(p.g.pad);
          T* dst = row + oy * p.ow;
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(p.h)) {
            std::fill(dst, dst + p.ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<size_t>(iy) * p.w;
          for (size_t ox = 0; ox < p.ow; ++ox) {
            const ptrdiff_t ix = static_cast<ptrdiff_t>(ox * p.g.stride + kx * p.g.dilation) -
                                 static_cast<ptrdiff_t>(p.g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<ptrdiff_t>(p.w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvPlan& p, const T* col, T* img) {
  const size_t np = p.pixels();
  for (size_t c = 0; c < p.ci; ++c) {
    for (size_t ky = 0; ky < p.kh; ++ky) {
      for (size_t kx = 0; kx < p.kw; ++kx) {
        const T* row = col + ((c * p.kh + ky) * p.kw + kx) * np;
        T* plane = img + c * p.h * p.w;
        for (size_t oy = 0; oy < p.oh; ++oy) {
          const ptrdiff_t iy = static_cast<ptrdiff_t>(oy * p.g.stride + ky * p.g.dilation) -
                               static_cast<ptrdiff_t>(p.g.pad);
          if (iy < 0 || iy >= static_cast<ptrdiff_t>(p.h)) continue;
          T* dst = plane + static_cast<size_t>(iy) * p.w;
          const T* src = row + oy * p.ow;
          for (size_t ox = 0; ox < p.ow; ++ox) {
            const ptrdiff_t ix = static_cast<ptrdiff_t>(ox * p.g.stride + kx * p.g.dilation) -
                                 static_cast<ptrdiff_t>(p.g.pad);
            if (ix >= 0 && ix < static_cast<ptrdiff_t>(p.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

bool any_grad(std::initializer_list<bool> flags) {
  return std::any_of(flags.begin(), flags.end(), [](bool b) { return b; });
}

}  // namespace

template <typename T>
BasicTensor<T>& conv2d(Tape<T>& tape, BasicTensor<T>& input, BasicTensor<T>& weight,
                       BasicTensor<T>& bias, const ConvGeom& geom) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (geom.stride < 1 || geom.dilation < 1) {
    throw ConfigError("conv2d: stride and dilation must be >= 1 (stride=" +
                      std::to_string(geom.stride) + ", dilation=" + std::to_string(geom.dilation) +
                      ")");
  }
  if (ws.c != is.c) {
    throw ConfigError("conv2d: input has " + std::to_string(is.c) + " channels but weight " +
                      ws.str() + " expects c_in=" + std::to_string(ws.c));
  }
  if (bias.size() != ws.n) {
    throw ConfigError("conv2d: bias has " + std::to_string(bias.size()) +
                      " values but weight has c_out=" + std::to_string(ws.n));
  }
  ConvPlan p{is.n, is.c, is.h, is.w, ws.n, ws.h, ws.w, conv_out_size(is.h, ws.h, geom),
             conv_out_size(is.w, ws.w, geom), geom};
  if (p.oh == 0 || p.ow == 0 || ws.h == 0 || ws.w == 0) {
    throw ConfigError("conv2d: kernel " + std::to_string(ws.h) + "x" + std::to_string(ws.w) +
                      " does not fit input " + std::to_string(is.h) + "x" + std::to_string(is.w) +
                      " with pad " + std::to_string(geom.pad));
  }
  if (!weight.all_finite() || !bias.all_finite()) {
    throw NumericError("conv2d: non-finite value in parameters of shape " + ws.str());
  }

  const bool needs_grad = any_grad({input.requires_grad(), weight.requires_grad(), bias.requires_grad()});
  BasicTensor<T>& out = tape.make({p.n, p.co, p.oh, p.ow}, needs_grad);
  tape.count("conv2d");
  tape.count("conv2d.macs", p.n * p.co * p.pixels() * p.patch());

  const size_t K = p.patch();
  const size_t P = p.pixels();
  auto cols = std::make_shared<std::vector<T>>(p.direct() ? 0 : p.n * K * P);
  for (size_t b = 0; b < p.n; ++b) {
    const T* img = input.data().data() + b * p.ci * p.h * p.w;
    const T* col = img;
    if (!p.direct()) {
      T* dst = cols->data() + b * K * P;
      im2col(p, img, dst);
      col = dst;
    }
    T* o = out.data().data() + b * p.co * P;
    simd::gemm_nn<T>(p.co, P, K, weight.data().data(), K, col, P, o, P);
    for (size_t c = 0; c < p.co; ++c) {
      const T bv = bias[c];
      T* plane = o + c * P;
      for (size_t i = 0; i < P; ++i) plane[i] += bv;
    }
  }

  if (needs_grad) {
    tape.record([p, cols, in = &input, w = &weight, bs = &bias, o = &out]() {
      const size_t K = p.patch();
      const size_t P = p.pixels();
      std::vector<T> dcol(in->requires_grad() && !p.direct() ? K * P : 0);
      for (size_t b = 0; b < p.n; ++b) {
        const T* dout = o->grad().data() + b * p.co * P;
        const T* col = p.direct() ? in->data().data() + b * p.ci * p.h * p.w
                                  : cols->data() + b * K * P;
        if (w->requires_grad()) {
          simd::gemm_nt<T>(p.co, K, P, dout, P, col, P, w->grad().data(), K);
        }
        if (bs->requires_grad()) {
          for (size_t c = 0; c < p.co; ++c) {
            T s = T(0);
            for (size_t i = 0; i < P; ++i) s += dout[c * P + i];
            bs->grad()[c] += s;
          }
        }
        if (in->requires_grad()) {
          T* din = in->grad().data() + b * p.ci * p.h * p.w;
          if (p.direct()) {
            simd::gemm_tn<T>(K, P, p.co, w->data().data(), K, dout, P, din, P);
          } else {
            std::fill(dcol.begin(), dcol.end(), T(0));
            simd::gemm_tn<T>(K, P, p.co, w->data().data(), K, dout, P, dcol.data(), P);
            col2im_add(p, dcol.data(), din);
          }
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise and pooling

template <typename T>
BasicTensor<T>& relu(Tape<T>& tape, BasicTensor<T>& input) {
  BasicTensor<T>& out = tape.make(input.shape(), input.requires_grad());
  simd::relu<T>(input.size(), input.data().data(), out.data().data());
  if (tape.trace_kinks()) {
    std::uint64_t h = 0;
    for (size_t i = 0; i < input.size(); ++i) h = h * 31 + (input[i] > T(0) ? 1 : 0);
    tape.note_kinks(h);
  }
  if (input.requires_grad()) {
    tape.record([in = &input, o = &out]() {
      simd::relu_backward<T>(in->size(), in->data().data(), o->grad().data(), in->grad().data());
    });
  }
  return out;
}

template <typename T>
BasicTensor<T>& max_pool2d(Tape<T>& tape, BasicTensor<T>& input, size_t k, size_t stride) {
  const Shape& s = input.shape();
  if (k == 0 || stride == 0) {
    throw ConfigError("max_pool2d: kernel and stride must be >= 1 (k=" + std::to_string(k) +
                      ", stride=" + std::to_string(stride) + ")");
  }
  if (s.h < k || s.w < k) {
    throw ConfigError("max_pool2d: kernel " + std::to_string(k) + " larger than input " +
                      std::to_string(s.h) + "x" + std::to_string(s.w));
  }
  const size_t oh = (s.h - k) / stride + 1;
  const size_t ow = (s.w - k) / stride + 1;
  BasicTensor<T>& out = tape.make({s.n, s.c, oh, ow}, input.requires_grad());
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
  const T* src = input.data().data();
  T* dst = out.data().data();
  size_t o = 0;
  for (size_t plane = 0; plane < s.n * s.c; ++plane) {
    const size_t base = plane * s.h * s.w;
    for (size_t oy = 0; oy < oh; ++oy) {
      for (size_t ox = 0; ox < ow; ++ox, ++o) {
        size_t best = base + (oy * stride) * s.w + ox * stride;
        for (size_t ky = 0; ky < k; ++ky) {
          for (size_t kx = 0; kx < k; ++kx) {
            const size_t idx = base + (oy * stride + ky) * s.w + ox * stride + kx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        dst[o] = src[best];
        (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  if (tape.trace_kinks()) {
    std::uint64_t h = 0;
    for (std::uint32_t a : *argmax) h = h * 1000003 + a;
    tape.note_kinks(h);
  }
  if (input.requires_grad()) {
    tape.record([argmax, in = &input, out_t = &out]() {
      auto din = in->grad();
      auto dout = out_t->grad();
      for (size_t i = 0; i < dout.size(); ++i) din[(*argmax)[i]] += dout[i];
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> bilinear_filler(size_t f) {
  if (f < 2) throw ConfigError("bilinear_filler: factor must be >= 2, got " + std::to_string(f));
  const size_t k = 2 * f - f % 2;
  const double c = static_cast<double>(2 * f - 1 - f % 2) / static_cast<double>(2 * f);
  BasicTensor<T> kernel({1, 1, k, k});
  for (size_t i = 0; i < k; ++i) {
    const double wi = 1.0 - std::abs(static_cast<double>(i) / static_cast<double>(f) - c);
    for (size_t j = 0; j < k; ++j) {
      const double wj = 1.0 - std::abs(static_cast<double>(j) / static_cast<double>(f) - c);
      kernel.at(0, 0, i, j) = static_cast<T>(wi * wj);
    }
  }
  return kernel;
}

template <typename T>
BasicTensor<T>& bilinear_upsample(Tape<T>& tape, BasicTensor<T>& input, size_t f) {
  static const BasicTensor<T> f2 = bilinear_filler<T>(2);
  if (f == 2) return bilinear_upsample(tape, input, f2, f);
  const BasicTensor<T> filler = bilinear_filler<T>(f);
  return bilinear_upsample(tape, input, filler, f);
}

template <typename T>
BasicTensor<T>& bilinear_upsample(Tape<T>& tape, BasicTensor<T>& input,
                                  const BasicTensor<T>& filler, size_t f) {
  if (f < 2) throw ConfigError("bilinear_upsample: factor must be >= 2, got " + std::to_string(f));
  const size_t k = 2 * f - f % 2;
  if (filler.shape() != Shape{1, 1, k, k}) {
    throw ConfigError("bilinear_upsample: filler shape " + filler.shape().str() +
                      " does not match factor " + std::to_string(f));
  }
  const ptrdiff_t pad = static_cast<ptrdiff_t>((k - f + 1) / 2);
  const Shape& s = input.shape();
  const size_t oh = s.h * f;
  const size_t ow = s.w * f;
  BasicTensor<T>& out = tape.make({s.n, s.c, oh, ow}, input.requires_grad());
  // Kernel copy keeps the adjoint valid even if the caller's filler dies.
  auto kern = std::make_shared<std::vector<T>>(filler.values());

  auto for_each_tap = [=](size_t iy, size_t ix, auto&& fn) {
    for (size_t ky = 0; ky < k; ++ky) {
      const ptrdiff_t oy = static_cast<ptrdiff_t>(iy * f + ky) - pad;
      if (oy < 0 || oy >= static_cast<ptrdiff_t>(oh)) continue;
      for (size_t kx = 0; kx < k; ++kx) {
        const ptrdiff_t ox = static_cast<ptrdiff_t>(ix * f + kx) - pad;
        if (ox < 0 || ox >= static_cast<ptrdiff_t>(ow)) continue;
        fn(static_cast<size_t>(oy) * ow + static_cast<size_t>(ox), (*kern)[ky * k + kx]);
      }
    }
  };

  for (size_t plane = 0; plane < s.n * s.c; ++plane) {
    const T* src = input.data().data() + plane * s.h * s.w;
    T* dst = out.data().data() + plane * oh * ow;
    for (size_t iy = 0; iy < s.h; ++iy) {
      for (size_t ix = 0; ix < s.w; ++ix) {
        const T v = src[iy * s.w + ix];
        for_each_tap(iy, ix, [&](size_t o, T wgt) { dst[o] += v * wgt; });
      }
    }
  }
  if (input.requires_grad()) {
    tape.record([=, in = &input, o = &out]() {
      for (size_t plane = 0; plane < s.n * s.c; ++plane) {
        const T* dout = o->grad().data() + plane * oh * ow;
        T* din = in->grad().data() + plane * s.h * s.w;
        for (size_t iy = 0; iy < s.h; ++iy) {
          for (size_t ix = 0; ix < s.w; ++ix) {
            T acc = T(0);
            for_each_tap(iy, ix, [&](size_t oi, T wgt) { acc += dout[oi] * wgt; });
            din[iy * s.w + ix] += acc;
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T>& concat_channels(Tape<T>& tape, std::span<BasicTensor<T>* const> inputs) {
  if (inputs.empty()) throw ConfigError("concat_channels: no inputs");
  const Shape& first = inputs.front()->shape();
  size_t channels = 0;
  bool needs_grad = false;
  for (const BasicTensor<T>* t : inputs) {
    const Shape& s = t->shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ConfigError("concat_channels: shape " + s.str() + " is incompatible with " +
                        first.str() + " (resample before concatenating)");
    }
    channels += s.c;
    needs_grad = needs_grad || t->requires_grad();
  }
  BasicTensor<T>& out = tape.make({first.n, channels, first.h, first.w}, needs_grad);
  const size_t plane = first.h * first.w;
  for (size_t b = 0; b < first.n; ++b) {
    size_t offset = 0;
    for (const BasicTensor<T>* t : inputs) {
      const size_t len = t->shape().c * plane;
      const T* src = t->data().data() + b * len;
      std::copy(src, src + len, out.data().data() + (b * channels * plane) + offset);
      offset += len;
    }
  }
  if (needs_grad) {
    std::vector<BasicTensor<T>*> srcs(inputs.begin(), inputs.end());
    tape.record([srcs, channels, plane, n = first.n, o = &out]() {
      for (size_t b = 0; b < n; ++b) {
        size_t offset = 0;
        for (BasicTensor<T>* t : srcs) {
          const size_t len = t->shape().c * plane;
          if (t->requires_grad()) {
            const T* g = o->grad().data() + b * channels * plane + offset;
            T* dst = t->grad().data() + b * len;
            for (size_t i = 0; i < len; ++i) dst[i] += g[i];
          }
          offset += len;
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T>& softmax_pair(Tape<T>& tape, BasicTensor<T>& logits) {
  const Shape& s = logits.shape();
  if (s.c % 2 != 0) {
    throw ConfigError("softmax_pair: channel count must be even, got " + std::to_string(s.c));
  }
  BasicTensor<T>& out = tape.make(s, logits.requires_grad());
  const size_t plane = s.h * s.w;
  for (size_t b = 0; b < s.n; ++b) {
    for (size_t a = 0; a < s.c / 2; ++a) {
      const T* x0 = logits.data().data() + (b * s.c + 2 * a) * plane;
      const T* x1 = x0 + plane;
      T* p0 = out.data().data() + (b * s.c + 2 * a) * plane;
      T* p1 = p0 + plane;
      for (size_t i = 0; i < plane; ++i) {
        const T m = std::max(x0[i], x1[i]);
        const T e0 = std::exp(x0[i] - m);
        const T e1 = std::exp(x1[i] - m);
        const T z = e0 + e1;
        p0[i] = e0 / z;
        p1[i] = e1 / z;
      }
    }
  }
  if (logits.requires_grad()) {
    tape.record([s, plane, in = &logits, o = &out]() {
      for (size_t b = 0; b < s.n; ++b) {
        for (size_t a = 0; a < s.c / 2; ++a) {
          const size_t base = (b * s.c + 2 * a) * plane;
          const T* p0 = o->data().data() + base;
          const T* p1 = p0 + plane;
          const T* g0 = o->grad().data() + base;
          const T* g1 = g0 + plane;
          T* d0 = in->grad().data() + base;
          T* d1 = d0 + plane;
          for (size_t i = 0; i < plane; ++i) {
            const T dot = g0[i] * p0[i] + g1[i] * p1[i];
            d0[i] += p0[i] * (g0[i] - dot);
            d1[i] += p1[i] * (g1[i] - dot);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T>& sum(Tape<T>& tape, BasicTensor<T>& input) {
  BasicTensor<T>& out = tape.make({1, 1, 1, 1}, input.requires_grad());
  T s = T(0);
  for (T v : input.data()) s += v;
  out[0] = s;
  if (input.requires_grad()) {
    tape.record([in = &input, o = &out]() {
      const T g = o->grad()[0];
      for (T& d : in->grad()) d += g;
    });
  }
  return out;
}

template <typename T>
BasicTensor<T>& weighted_sum(Tape<T>& tape, BasicTensor<T>& input, std::span<const T> weights) {
  if (weights.size() != input.size()) {
    throw ConfigError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(input.size()) + " elements");
  }
  BasicTensor<T>& out = tape.make({1, 1, 1, 1}, input.requires_grad());
  T s = T(0);
  for (size_t i = 0; i < weights.size(); ++i) s += weights[i] * input[i];
  out[0] = s;
  if (input.requires_grad()) {
    std::vector<T> w(weights.begin(), weights.end());
    tape.record([w = std::move(w), in = &input, o = &out]() {
      const T g = o->grad()[0];
      auto d = in->grad();
      for (size_t i = 0; i < w.size(); ++i) d[i] += g * w[i];
    });
  }
  return out;
}

template <typename T>
void sgd_step(std::span<BasicTensor<T>* const> params, std::span<BasicTensor<T>> velocity, T lr,
              T momentum, T weight_decay) {
  if (params.size() != velocity.size()) {
    throw ConfigError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                      std::to_string(velocity.size()) + " velocity buffers");
  }
  std::vector<T> zeros;
  for (size_t i = 0; i < params.size(); ++i) {
    BasicTensor<T>& p = *params[i];
    BasicTensor<T>& v = velocity[i];
    if (v.shape() != p.shape()) {
      throw ConfigError("sgd_step: velocity shape " + v.shape().str() +
                        " does not match parameter " + p.shape().str());
    }
    const T* g = p.grad().data();
    if (p.grad().size() != p.size()) {
      zeros.assign(p.size(), T(0));
      g = zeros.data();
    }
    simd::sgd_update<T>(p.size(), p.data().data(), g, v.data().data(), lr, momentum, weight_decay);
  }
}

#define MBFCN_INSTANTIATE_OPS(T)                                                              \
  template class Tape<T>;                                                                     \
  template BasicTensor<T>& conv2d(Tape<T>&, BasicTensor<T>&, BasicTensor<T>&, BasicTensor<T>&, \
                                  const ConvGeom&);                                           \
  template BasicTensor<T>& relu(Tape<T>&, BasicTensor<T>&);                                   \
  template BasicTensor<T>& max_pool2d(Tape<T>&, BasicTensor<T>&, size_t, size_t);             \
  template BasicTensor<T> bilinear_filler<T>(size_t);                                         \
  template BasicTensor<T>& bilinear_upsample(Tape<T>&, BasicTensor<T>&, size_t);              \
  template BasicTensor<T>& bilinear_upsample(Tape<T>&, BasicTensor<T>&,                       \
                                             const BasicTensor<T>&, size_t);                  \
  template BasicTensor<T>& concat_channels(Tape<T>&, std::span<BasicTensor<T>* const>);      \
  template BasicTensor<T>& softmax_pair(Tape<T>&, BasicTensor<T>&);                           \
  template BasicTensor<T>& sum(Tape<T>&, BasicTensor<T>&);                                    \
  template BasicTensor<T>& weighted_sum(Tape<T>&, BasicTensor<T>&, std::span<const T>);       \
  template void sgd_step(std::span<BasicTensor<T>* const>, std::span<BasicTensor<T>>, T, T, T);

MBFCN_INSTANTIATE_OPS(float)
MBFCN_INSTANTIATE_OPS(double)

}  // namespace mbfcn
