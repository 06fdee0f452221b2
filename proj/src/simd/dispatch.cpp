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
#include <atomic>

#include "mbfcn/error.hpp"
#include "mbfcn/simd/kernels.hpp"

namespace mbfcn::simd {
namespace {

const KernelTable kScalarTable = {
    &scalar::gemm_nn<float>, &scalar::gemm_nt<float>,       &scalar::gemm_tn<float>,
    &scalar::relu<float>,    &scalar::relu_backward<float>, &scalar::sgd_update<float>,
};

const KernelTable kAvx2Table = {
    &avx2::gemm_nn, &avx2::gemm_nt,       &avx2::gemm_tn,
    &avx2::relu,    &avx2::relu_backward, &avx2::sgd_update,
};

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw ConfigError("instruction set " + std::string(isa_name(isa)) +
                      " is not supported on this CPU");
  }
  active().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels(Isa isa) { return isa == Isa::avx2 ? kAvx2Table : kScalarTable; }

const KernelTable& kernels() { return kernels(active_isa()); }

}  // namespace mbfcn::simd
