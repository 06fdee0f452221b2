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

// Data-parallel inner loops of the tensor library.
//
// Every kernel has a scalar reference implementation (templated, used for
// real64 and as the portable fallback) and an AVX2/FMA float variant. The
// active float table is chosen once at startup from CPUID and may be
// overridden for equivalence testing.
//
// Matrices are row-major with explicit leading dimensions. All GEMMs
// accumulate into C.

#include <cstddef>
#include <string_view>
#include <type_traits>

namespace mbfcn::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);
bool isa_supported(Isa isa);
Isa active_isa();
// Throws ConfigError when the ISA is not supported by this CPU.
void set_active_isa(Isa isa);

struct KernelTable {
  // C[MxN] += A[MxK] * B[KxN]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc);
  // C[MxN] += A[MxK] * B[NxK]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc);
  // C[MxN] += A[KxM]^T * B[KxN]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                  const float* b, std::size_t ldb, float* c, std::size_t ldc);
  // y = max(0, x)
  void (*relu)(std::size_t n, const float* x, float* y);
  // dx += (x > 0) ? dy : 0
  void (*relu_backward)(std::size_t n, const float* x, const float* dy, float* dx);
  // v = momentum * v + g + decay * p;  p -= lr * v
  void (*sgd_update)(std::size_t n, float* p, const float* g, float* v, float lr, float momentum,
                     float decay);
};

const KernelTable& kernels();
const KernelTable& kernels(Isa isa);

namespace scalar {

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * lda + p];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * ldb;
      T s = T(0);
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * ldc + j] += s;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * ldb;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = a[p * lda + i];
      T* crow = c + i * ldc;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx) {
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > T(0)) dx[i] += dy[i];
  }
}

template <typename T>
void sgd_update(std::size_t n, T* p, const T* g, T* v, T lr, T momentum, T decay) {
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + decay * p[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace scalar

namespace avx2 {
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc);
void relu(std::size_t n, const float* x, float* y);
void relu_backward(std::size_t n, const float* x, const float* dy, float* dx);
void sgd_update(std::size_t n, float* p, const float* g, float* v, float lr, float momentum,
                float decay);
}  // namespace avx2

// Precision-generic entry points: float goes through the active table,
// double always takes the scalar reference path.
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    scalar::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    scalar::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
             std::size_t ldb, T* c, std::size_t ldc) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    scalar::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

template <typename T>
void relu(std::size_t n, const T* x, T* y) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().relu(n, x, y);
  } else {
    scalar::relu(n, x, y);
  }
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* dy, T* dx) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().relu_backward(n, x, dy, dx);
  } else {
    scalar::relu_backward(n, x, dy, dx);
  }
}

template <typename T>
void sgd_update(std::size_t n, T* p, const T* g, T* v, T lr, T momentum, T decay) {
  if constexpr (std::is_same_v<T, float>) {
    kernels().sgd_update(n, p, g, v, lr, momentum, decay);
  } else {
    scalar::sgd_update(n, p, g, v, lr, momentum, decay);
  }
}

}  // namespace mbfcn::simd
