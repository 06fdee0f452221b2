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
#include <stdexcept>
#include <string>

namespace mbfcn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid shapes, geometry, or model/training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An operation invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid user-supplied data such as degenerate boxes.
class InputError : public Error {
 public:
  using Error::Error;
};

// Text format errors. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Binary format errors (checkpoints, images).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbfcn
