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
#include "mbfcn/log.hpp"

#include <iostream>
#include <mutex>
#include <string>

namespace mbfcn {
namespace {

std::mutex g_mutex;

void default_sink(LogLevel level, std::string_view message) {
  if (level == LogLevel::warning) std::cerr << "warning: " << message << '\n';
}

LogSink& sink() {
  static LogSink s = default_sink;
  return s;
}

void emit(LogLevel level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (sink()) sink()(level, message);
}

}  // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard lock(g_mutex);
  LogSink prev = std::move(sink());
  sink() = s ? std::move(s) : LogSink(default_sink);
  return prev;
}

void log_info(std::string_view message) { emit(LogLevel::info, message); }
void log_warning(std::string_view message) { emit(LogLevel::warning, message); }

}  // namespace mbfcn
