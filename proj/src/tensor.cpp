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
#include "mbfcn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mbfcn/error.hpp"

namespace mbfcn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(shape), data_(shape.size(), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + shape_.str());
  }
}

template <typename T>
void BasicTensor<T>::enable_grad() {
  requires_grad_ = true;
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), T(0));
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  std::fill(grad_.begin(), grad_.end(), T(0));
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace mbfcn
