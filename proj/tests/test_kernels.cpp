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
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mbfcn/rng.hpp"
#include "mbfcn/simd/kernels.hpp"

namespace mbfcn::simd {
namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// AVX2 results may differ from the scalar order of summation by rounding
// only; bound the difference by the magnitude of the summed products.
void expect_close(const std::vector<float>& got, const std::vector<float>& want, std::size_t k) {
  ASSERT_EQ(got.size(), want.size());
  const float tol = 1e-6f * static_cast<float>(k + 4) * 4.0f;
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_NEAR(got[i], want[i], tol) << "at " << i;
  }
}

class KernelTest : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!isa_supported(Isa::avx2)) GTEST_SKIP() << "CPU lacks AVX2/FMA";
  }
};

TEST_F(KernelTest, GemmVariantsMatchScalar) {
  Rng rng(3);
  const std::size_t dims[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 33, 64};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = dims[rng.index(std::size(dims))];
    const std::size_t n = dims[rng.index(std::size(dims))];
    const std::size_t k = dims[rng.index(std::size(dims))];
    const std::size_t pad = rng.index(3);
    const auto a = random_vec(rng, (m + pad) * (k + pad));
    const auto at = random_vec(rng, (k + pad) * (m + pad));
    const auto b = random_vec(rng, (k + pad) * (n + pad));
    const auto bt = random_vec(rng, (n + pad) * (k + pad));
    const auto c0 = random_vec(rng, m * (n + pad));
    const std::size_t ldc = n + pad;

    auto ref = c0, got = c0;
    scalar::gemm_nn<float>(m, n, k, a.data(), k + pad, b.data(), n + pad, ref.data(), ldc);
    kernels(Isa::avx2).gemm_nn(m, n, k, a.data(), k + pad, b.data(), n + pad, got.data(), ldc);
    expect_close(got, ref, k);

    ref = c0, got = c0;
    scalar::gemm_nt<float>(m, n, k, a.data(), k + pad, bt.data(), k + pad, ref.data(), ldc);
    kernels(Isa::avx2).gemm_nt(m, n, k, a.data(), k + pad, bt.data(), k + pad, got.data(), ldc);
    expect_close(got, ref, k);

    ref = c0, got = c0;
    scalar::gemm_tn<float>(m, n, k, at.data(), m + pad, b.data(), n + pad, ref.data(), ldc);
    kernels(Isa::avx2).gemm_tn(m, n, k, at.data(), m + pad, b.data(), n + pad, got.data(), ldc);
    expect_close(got, ref, k);
  }
}

TEST_F(KernelTest, ElementwiseKernelsMatchScalarExactly) {
  Rng rng(5);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 31u, 100u}) {
    const auto x = random_vec(rng, n);
    std::vector<float> y_ref(n), y_got(n);
    scalar::relu<float>(n, x.data(), y_ref.data());
    kernels(Isa::avx2).relu(n, x.data(), y_got.data());
    EXPECT_EQ(y_ref, y_got);

    const auto dy = random_vec(rng, n);
    auto dx_ref = random_vec(rng, n);
    auto dx_got = dx_ref;
    scalar::relu_backward<float>(n, x.data(), dy.data(), dx_ref.data());
    kernels(Isa::avx2).relu_backward(n, x.data(), dy.data(), dx_got.data());
    EXPECT_EQ(dx_ref, dx_got);

    auto p_ref = random_vec(rng, n), v_ref = random_vec(rng, n);
    auto p_got = p_ref, v_got = v_ref;
    const auto g = random_vec(rng, n);
    scalar::sgd_update<float>(n, p_ref.data(), g.data(), v_ref.data(), 0.01f, 0.9f, 0.0005f);
    kernels(Isa::avx2).sgd_update(n, p_got.data(), g.data(), v_got.data(), 0.01f, 0.9f, 0.0005f);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(p_ref[i], p_got[i], 1e-6f);
      EXPECT_NEAR(v_ref[i], v_got[i], 1e-6f);
    }
  }
}

TEST(KernelDispatch, ScalarAlwaysAvailableAndSelectable) {
  EXPECT_TRUE(isa_supported(Isa::scalar));
  const Isa before = active_isa();
  set_active_isa(Isa::scalar);
  EXPECT_EQ(active_isa(), Isa::scalar);
  EXPECT_EQ(&kernels(), &kernels(Isa::scalar));
  set_active_isa(before);
  EXPECT_EQ(isa_name(Isa::avx2), "avx2");
}

TEST(KernelDispatch, DoubleAlwaysTakesScalarPath) {
  // The generic entry point for double must reproduce the naive triple loop
  // exactly, whatever float table is active.
  Rng rng(9);
  const std::size_t m = 5, n = 9, k = 13;
  std::vector<double> a(m * k), b(k * n), c(m * n, 0.0), ref(m * n, 0.0);
  for (double& v : a) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);
  gemm_nn<double>(m, n, k, a.data(), k, b.data(), n, c.data(), n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t j = 0; j < n; ++j) ref[i * n + j] += a[i * k + p] * b[p * n + j];
    }
  }
  EXPECT_EQ(c, ref);
}

}  // namespace
}  // namespace mbfcn::simd
