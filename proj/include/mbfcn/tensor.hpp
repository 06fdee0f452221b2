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
#include <span>
#include <string>
#include <vector>

namespace mbfcn {

struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense (n, c, h, w) array in row-major order with an optional gradient
// buffer of the same shape.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  T at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data_[((n * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  bool requires_grad() const { return requires_grad_; }
  // Allocates (zeroed) gradient storage.
  void enable_grad();
  void zero_grad();
  std::span<T> grad() { return grad_; }
  std::span<const T> grad() const { return grad_; }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
  bool requires_grad_ = false;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Converts between precisions; gradients are not copied.
template <typename To, typename From>
BasicTensor<To> tensor_cast(const BasicTensor<From>& src) {
  std::vector<To> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<To>(src[i]);
  return BasicTensor<To>(src.shape(), std::move(out));
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace mbfcn
