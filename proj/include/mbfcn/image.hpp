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

#include "mbfcn/tensor.hpp"

namespace mbfcn {

// Bilinear resampling with half-pixel centers; returns a copy when the size
// is unchanged.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);

Tensor flip_horizontal(const Tensor& image);

// Zero-pads on the right and bottom up to the next multiple.
Tensor pad_to_multiple(const Tensor& image, std::size_t multiple);

}  // namespace mbfcn
