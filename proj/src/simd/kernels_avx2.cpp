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
// AVX2 + FMA float kernels. This unit is compiled with -mavx2 -mfma and is
// only ever called after a CPUID check in dispatch.cpp.

#include <immintrin.h>

#include <cstdint>

#include "mbfcn/simd/kernels.hpp"

namespace mbfcn::simd::avx2 {
namespace {

inline __m256i tail_mask(std::size_t r) {
  alignas(32) static const std::int32_t kMask[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                                     0,  0,  0,  0,  0,  0,  0,  0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMask + 8 - r));
}

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehdup_ps(lo);
  __m128 s = _mm_add_ps(lo, sh);
  sh = _mm_movehl_ps(sh, s);
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

// C[MxN] += op(A) * B where op(A)(i, p) = a[i * rs + p * cs].
void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t rs,
                  std::size_t cs, const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    float* c0 = c + (i + 0) * ldc;
    float* c1 = c + (i + 1) * ldc;
    float* c2 = c + (i + 2) * ldc;
    float* c3 = c + (i + 3) * ldc;
    const float* a0 = a + (i + 0) * rs;
    const float* a1 = a + (i + 1) * rs;
    const float* a2 = a + (i + 2) * rs;
    const float* a3 = a + (i + 3) * rs;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256 r00 = _mm256_loadu_ps(c0 + j), r01 = _mm256_loadu_ps(c0 + j + 8);
      __m256 r10 = _mm256_loadu_ps(c1 + j), r11 = _mm256_loadu_ps(c1 + j + 8);
      __m256 r20 = _mm256_loadu_ps(c2 + j), r21 = _mm256_loadu_ps(c2 + j + 8);
      __m256 r30 = _mm256_loadu_ps(c3 + j), r31 = _mm256_loadu_ps(c3 + j + 8);
      const float* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += ldb) {
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        const std::size_t off = p * cs;
        __m256 av = _mm256_broadcast_ss(a0 + off);
        r00 = _mm256_fmadd_ps(av, b0, r00);
        r01 = _mm256_fmadd_ps(av, b1, r01);
        av = _mm256_broadcast_ss(a1 + off);
        r10 = _mm256_fmadd_ps(av, b0, r10);
        r11 = _mm256_fmadd_ps(av, b1, r11);
        av = _mm256_broadcast_ss(a2 + off);
        r20 = _mm256_fmadd_ps(av, b0, r20);
        r21 = _mm256_fmadd_ps(av, b1, r21);
        av = _mm256_broadcast_ss(a3 + off);
        r30 = _mm256_fmadd_ps(av, b0, r30);
        r31 = _mm256_fmadd_ps(av, b1, r31);
      }
      _mm256_storeu_ps(c0 + j, r00);
      _mm256_storeu_ps(c0 + j + 8, r01);
      _mm256_storeu_ps(c1 + j, r10);
      _mm256_storeu_ps(c1 + j + 8, r11);
      _mm256_storeu_ps(c2 + j, r20);
      _mm256_storeu_ps(c2 + j + 8, r21);
      _mm256_storeu_ps(c3 + j, r30);
      _mm256_storeu_ps(c3 + j + 8, r31);
    }
    for (; j < n; j += 8) {
      const std::size_t r = n - j < 8 ? n - j : 8;
      const __m256i mask = tail_mask(r);
      __m256 r0 = _mm256_maskload_ps(c0 + j, mask);
      __m256 r1 = _mm256_maskload_ps(c1 + j, mask);
      __m256 r2 = _mm256_maskload_ps(c2 + j, mask);
      __m256 r3 = _mm256_maskload_ps(c3 + j, mask);
      const float* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += ldb) {
        const __m256 bv = _mm256_maskload_ps(bp, mask);
        const std::size_t off = p * cs;
        r0 = _mm256_fmadd_ps(_mm256_broadcast_ss(a0 + off), bv, r0);
        r1 = _mm256_fmadd_ps(_mm256_broadcast_ss(a1 + off), bv, r1);
        r2 = _mm256_fmadd_ps(_mm256_broadcast_ss(a2 + off), bv, r2);
        r3 = _mm256_fmadd_ps(_mm256_broadcast_ss(a3 + off), bv, r3);
      }
      _mm256_maskstore_ps(c0 + j, mask, r0);
      _mm256_maskstore_ps(c1 + j, mask, r1);
      _mm256_maskstore_ps(c2 + j, mask, r2);
      _mm256_maskstore_ps(c3 + j, mask, r3);
    }
  }
  for (; i < m; ++i) {
    float* crow = c + i * ldc;
    const float* arow = a + i * rs;
    std::size_t j = 0;
    for (; j < n; j += 8) {
      const std::size_t r = n - j < 8 ? n - j : 8;
      const __m256i mask = tail_mask(r);
      __m256 acc = _mm256_maskload_ps(crow + j, mask);
      const float* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += ldb) {
        acc = _mm256_fmadd_ps(_mm256_broadcast_ss(arow + p * cs), _mm256_maskload_ps(bp, mask),
                              acc);
      }
      _mm256_maskstore_ps(crow + j, mask, acc);
    }
  }
}

}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  gemm_strided(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
             const float* b, std::size_t ldb, float* c, std::size_t ldc) {
  const std::size_t kv = k - k % 8;
  const __m256i mask = tail_mask(k % 8);
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const float* a0 = a + i * lda;
    const float* a1 = a0 + lda;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const float* b0 = b + j * ldb;
      const float* b1 = b0 + ldb;
      const float* b2 = b1 + ldb;
      const float* b3 = b2 + ldb;
      __m256 s00 = _mm256_setzero_ps(), s01 = _mm256_setzero_ps();
      __m256 s02 = _mm256_setzero_ps(), s03 = _mm256_setzero_ps();
      __m256 s10 = _mm256_setzero_ps(), s11 = _mm256_setzero_ps();
      __m256 s12 = _mm256_setzero_ps(), s13 = _mm256_setzero_ps();
      auto step = [&](__m256 x0, __m256 x1, __m256 y0, __m256 y1, __m256 y2, __m256 y3) {
        s00 = _mm256_fmadd_ps(x0, y0, s00);
        s01 = _mm256_fmadd_ps(x0, y1, s01);
        s02 = _mm256_fmadd_ps(x0, y2, s02);
        s03 = _mm256_fmadd_ps(x0, y3, s03);
        s10 = _mm256_fmadd_ps(x1, y0, s10);
        s11 = _mm256_fmadd_ps(x1, y1, s11);
        s12 = _mm256_fmadd_ps(x1, y2, s12);
        s13 = _mm256_fmadd_ps(x1, y3, s13);
      };
      std::size_t p = 0;
      for (; p < kv; p += 8) {
        step(_mm256_loadu_ps(a0 + p), _mm256_loadu_ps(a1 + p), _mm256_loadu_ps(b0 + p),
             _mm256_loadu_ps(b1 + p), _mm256_loadu_ps(b2 + p), _mm256_loadu_ps(b3 + p));
      }
      if (p < k) {
        step(_mm256_maskload_ps(a0 + p, mask), _mm256_maskload_ps(a1 + p, mask),
             _mm256_maskload_ps(b0 + p, mask), _mm256_maskload_ps(b1 + p, mask),
             _mm256_maskload_ps(b2 + p, mask), _mm256_maskload_ps(b3 + p, mask));
      }
      float* c0 = c + i * ldc + j;
      float* c1 = c0 + ldc;
      c0[0] += hsum(s00);
      c0[1] += hsum(s01);
      c0[2] += hsum(s02);
      c0[3] += hsum(s03);
      c1[0] += hsum(s10);
      c1[1] += hsum(s11);
      c1[2] += hsum(s12);
      c1[3] += hsum(s13);
    }
    for (; j < n; ++j) {
      const float* bj = b + j * ldb;
      __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
      std::size_t p = 0;
      for (; p < kv; p += 8) {
        const __m256 y = _mm256_loadu_ps(bj + p);
        s0 = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + p), y, s0);
        s1 = _mm256_fmadd_ps(_mm256_loadu_ps(a1 + p), y, s1);
      }
      if (p < k) {
        const __m256 y = _mm256_maskload_ps(bj + p, mask);
        s0 = _mm256_fmadd_ps(_mm256_maskload_ps(a0 + p, mask), y, s0);
        s1 = _mm256_fmadd_ps(_mm256_maskload_ps(a1 + p, mask), y, s1);
      }
      c[i * ldc + j] += hsum(s0);
      c[(i + 1) * ldc + j] += hsum(s1);
    }
  }
  for (; i < m; ++i) {
    const float* ai = a + i * lda;
    for (std::size_t j = 0; j < n; ++j) {
      const float* bj = b + j * ldb;
      __m256 s = _mm256_setzero_ps();
      std::size_t p = 0;
      for (; p < kv; p += 8) {
        s = _mm256_fmadd_ps(_mm256_loadu_ps(ai + p), _mm256_loadu_ps(bj + p), s);
      }
      if (p < k) {
        s = _mm256_fmadd_ps(_mm256_maskload_ps(ai + p, mask), _mm256_maskload_ps(bj + p, mask), s);
      }
      c[i * ldc + j] += hsum(s);
    }
  }
}

void relu(std::size_t n, const float* x, float* y) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(std::size_t n, const float* x, const float* dy, float* dx) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 keep = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 g = _mm256_and_ps(keep, _mm256_loadu_ps(dy + i));
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), g));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0f) dx[i] += dy[i];
  }
}

void sgd_update(std::size_t n, float* p, const float* g, float* v, float lr, float momentum,
                float decay) {
  const __m256 vm = _mm256_set1_ps(momentum);
  const __m256 vd = _mm256_set1_ps(decay);
  const __m256 vlr = _mm256_set1_ps(lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 pv = _mm256_loadu_ps(p + i);
    __m256 vel = _mm256_fmadd_ps(vd, pv, _mm256_loadu_ps(g + i));
    vel = _mm256_fmadd_ps(vm, _mm256_loadu_ps(v + i), vel);
    _mm256_storeu_ps(v + i, vel);
    _mm256_storeu_ps(p + i, _mm256_fnmadd_ps(vlr, vel, pv));
  }
  for (; i < n; ++i) {
    v[i] = momentum * v[i] + g[i] + decay * p[i];
    p[i] -= lr * v[i];
  }
}

}  // namespace mbfcn::simd::avx2
