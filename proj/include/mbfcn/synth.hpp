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
#include <filesystem>
#include <string>

#include "mbfcn/dataset.hpp"

namespace mbfcn {

// Procedural face-glyph images. A face is a bordered disc carrying a fixed
// eyes-and-mouth dot motif; clutter is rectangles, plain rings and discs
// with a single dot, drawn over a noisy gray background.
struct SyntheticSpec {
  std::size_t image_size = 128;
  std::size_t faces_min = 1;
  std::size_t faces_max = 6;
  double face_min = 10.0;  // sizes are log-uniform in [face_min, face_max]
  double face_max = 96.0;
  std::size_t clutter_min = 2;
  std::size_t clutter_max = 8;
  std::uint64_t seed = 0;
  std::size_t count = 100;

  void validate() const;
};

inline constexpr double kMaxFaceOverlap = 0.3;
inline constexpr int kPlacementAttempts = 100;

std::string synth_image_id(std::size_t index);

// Image index of the dataset described by spec; a pure function of
// (spec.seed, index) and the geometry fields. Pixels are quantized to
// 8 bits so an image read back from disk is identical.
AnnotatedImage synth_image(const SyntheticSpec& spec, std::size_t index);

// Images [first, first + count) in memory.
InMemoryDataset synth_dataset(const SyntheticSpec& spec, std::size_t first, std::size_t count);

// Writes img_XXXXX.ppm files and annotations.txt (internal format) into dir.
void synth_generate(const SyntheticSpec& spec, const std::filesystem::path& dir);

}  // namespace mbfcn
