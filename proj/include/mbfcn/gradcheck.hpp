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
#include <cstdint>
#include <string>
#include <vector>

namespace mbfcn {

inline constexpr double kGradcheckEps = 1e-4;
inline constexpr double kGradcheckTolerance = 1e-4;

struct GradcheckCase {
  std::string name;
  std::size_t instances = 0;
  std::size_t coordinates = 0;  // entries compared
  std::size_t skipped = 0;      // perturbation crossed a relu/max-pool switch
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double seconds = 0.0;

  double max_rel_error() const;
  bool passed(double tolerance = kGradcheckTolerance) const;
};

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t op_instances = 100;
  std::size_t model_instances = 10;
};

// Analytic gradients against central finite differences in double
// precision for every differentiable op and for the full detection loss of
// a tiny two-branch model. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

}  // namespace mbfcn
