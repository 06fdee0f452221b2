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
#include "mbfcn/image.hpp"

#include <algorithm>
#include <cmath>

namespace mbfcn {

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  const Shape& s = image.shape();
  if (out_h == s.h && out_w == s.w) return image;
  Tensor out({s.n, s.c, out_h, out_w});
  const double sy = static_cast<double>(s.h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(s.w) / static_cast<double>(out_w);
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    const float* src = image.data().data() + plane * s.h * s.w;
    float* dst = out.data().data() + plane * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const double fy = std::clamp((static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0,
                                   static_cast<double>(s.h - 1));
      const std::size_t y0 = static_cast<std::size_t>(fy);
      const std::size_t y1 = std::min(y0 + 1, s.h - 1);
      const double wy = fy - static_cast<double>(y0);
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const double fx = std::clamp((static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0,
                                     static_cast<double>(s.w - 1));
        const std::size_t x0 = static_cast<std::size_t>(fx);
        const std::size_t x1 = std::min(x0 + 1, s.w - 1);
        const double wx = fx - static_cast<double>(x0);
        const double top = src[y0 * s.w + x0] * (1.0 - wx) + src[y0 * s.w + x1] * wx;
        const double bot = src[y1 * s.w + x0] * (1.0 - wx) + src[y1 * s.w + x1] * wx;
        dst[oy * out_w + ox] = static_cast<float>(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Tensor flip_horizontal(const Tensor& image) {
  const Shape& s = image.shape();
  Tensor out(s);
  for (std::size_t row = 0; row < s.n * s.c * s.h; ++row) {
    const float* src = image.data().data() + row * s.w;
    float* dst = out.data().data() + row * s.w;
    std::reverse_copy(src, src + s.w, dst);
  }
  return out;
}

Tensor pad_to_multiple(const Tensor& image, std::size_t multiple) {
  const Shape& s = image.shape();
  const std::size_t h = (s.h + multiple - 1) / multiple * multiple;
  const std::size_t w = (s.w + multiple - 1) / multiple * multiple;
  if (h == s.h && w == s.w) return image;
  Tensor out({s.n, s.c, h, w});
  for (std::size_t plane = 0; plane < s.n * s.c; ++plane) {
    for (std::size_t y = 0; y < s.h; ++y) {
      const float* src = image.data().data() + (plane * s.h + y) * s.w;
      std::copy(src, src + s.w, out.data().data() + (plane * h + y) * w);
    }
  }
  return out;
}

}  // namespace mbfcn
