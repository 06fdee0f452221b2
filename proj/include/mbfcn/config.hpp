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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mbfcn/model.hpp"
#include "mbfcn/training.hpp"

namespace mbfcn {

// One experiment: model layout plus training recipe.
//
// Text form is line-oriented "key = value" with '#' comments:
//
//   name = two-branch
//   backbone.widths = 16,32,64,64
//   branch.1.sources = C3,C4,C5
//   branch.1.stride = 8
//   branch.1.anchor_sizes = 12,16,24,32,48
//   train.base_lr = 0.001
//
// Branches are numbered from 1 without gaps. When no branch key is present
// the default two-branch model is used; a branch without anchor_sizes gets
// the default sizes for its stride. Unknown keys are errors.
struct RunConfig {
  std::string name;  // defaults to the model label
  ModelConfig model = ModelConfig::default_two_branch();
  TrainConfig train;

  std::string display_name() const { return name.empty() ? model.name() : name; }
  bool operator==(const RunConfig&) const = default;
};

std::vector<double> default_anchor_sizes(std::size_t stride);

// Throws ParseError (with line number) for syntax errors, unknown keys and
// bad values, and ConfigError when the assembled configuration is invalid.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace mbfcn
