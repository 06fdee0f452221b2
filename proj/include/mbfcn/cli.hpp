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

#include <iosfwd>
#include <string>
#include <vector>

namespace mbfcn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;     // bad flags, input or configuration
inline constexpr int kExitInternal = 2;  // anything else

// Entry point of the mbfcn tool: synth, train, detect, eval, ablate and
// gradcheck subcommands. Regular output goes to out, diagnostics to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace mbfcn
