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

#include <set>
#include <sstream>

#include "mbfcn/cli.hpp"
#include "mbfcn/gradcheck.hpp"

namespace mbfcn {
namespace {

TEST(Gradcheck, FullSuitePasses) {
  const GradcheckReport r = run_gradcheck();
  std::set<std::string> names;
  for (const GradcheckCase& c : r.cases) {
    names.insert(c.name);
    EXPECT_GT(c.coordinates, 0u) << c.name;
    EXPECT_LT(c.max_rel_error, kGradcheckTolerance) << c.name;
    EXPECT_LE(c.skipped * 20, c.coordinates) << c.name;
  }
  for (const char* op : {"conv2d", "relu", "max_pool2d", "bilinear_upsample", "concat_channels",
                         "softmax_pair"}) {
    EXPECT_TRUE(names.count(op)) << op;
  }
  EXPECT_GE(r.cases.size(), 8u);
  EXPECT_TRUE(r.passed());
  EXPECT_LT(r.seconds, 60.0);
}

TEST(Gradcheck, SeedsGiveDifferentInstancesThatAllPass) {
  for (std::uint64_t seed : {1u, 2u}) {
    GradcheckOptions o;
    o.seed = seed;
    o.op_instances = 10;
    o.model_instances = 2;
    EXPECT_TRUE(run_gradcheck(o).passed()) << seed;
  }
}

TEST(Gradcheck, ReportLogic) {
  GradcheckReport r;
  EXPECT_FALSE(r.passed());
  r.cases.push_back({"a", 1, 100, 0, 5e-5});
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.max_rel_error(), 5e-5);
  r.cases.push_back({"b", 1, 100, 0, 2e-4});
  EXPECT_FALSE(r.passed());
  r.cases.back().max_rel_error = 0.0;
  r.cases.back().skipped = 50;
  EXPECT_FALSE(r.passed());
}

TEST(Gradcheck, CliSubcommand) {
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(run_cli({"gradcheck"}, out, err), 0) << err.str();
  EXPECT_NE(out.str().find("max_rel_error"), std::string::npos) << out.str();
}

}  // namespace
}  // namespace mbfcn
