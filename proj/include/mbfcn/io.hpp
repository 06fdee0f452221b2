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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/eval.hpp"
#include "mbfcn/model.hpp"
#include "mbfcn/tensor.hpp"

namespace mbfcn {

// Binary PPM (P6) or PGM (P5) with maxval 255, returned as (1, 3, h, w) in
// [0, 1]. Gray images are replicated to three channels.
Tensor read_image(const std::filesystem::path& path);
Tensor decode_image(std::string_view bytes, const std::string& source);
// Writes P6; values are clamped to [0, 1] and rounded to 8 bits.
void write_image(const std::filesystem::path& path, const Tensor& image);
std::string encode_image(const Tensor& image);

enum class AnnotationFormat { internal, wider };

AnnotationFormat parse_annotation_format(std::string_view name);

struct AnnotationRecord {
  std::string path;
  std::vector<Box> gts;
  bool operator==(const AnnotationRecord&) const = default;
};

// Internal: per image "<path> <n>" followed by n lines "x y w h".
// WIDER: a path line, a count line, then count lines starting with
// "x y w h" (trailing attributes ignored); a zero count may be followed by
// an all-zero placeholder row. Boxes with w <= 0 or h <= 0 are dropped with
// a warning. Malformed input raises ParseError with the line number.
std::vector<AnnotationRecord> parse_annotations(std::istream& in, AnnotationFormat format,
                                                const std::string& source = "<annotations>");
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               AnnotationFormat format = AnnotationFormat::internal);

// Coordinates are written in shortest round-trip form, so parsing the
// output reproduces the records exactly.
void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);
void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

GroundTruthByImage ground_truth_by_image(const std::vector<AnnotationRecord>& records);

// Per image "# <image_id>" then "x y w h score" lines with six decimals.
// Images are written in id order; detections keep their given order.
void write_detections(std::ostream& out, const DetectionsByImage& dets);
void save_detections(const std::filesystem::path& path, const DetectionsByImage& dets);
DetectionsByImage parse_detections(std::istream& in, const std::string& source = "<detections>");
DetectionsByImage load_detections(const std::filesystem::path& path);

// Little-endian: "MBFC", u32 version, u32 length + config text, u32 tensor
// count, then per tensor u16 name length, name, 4 x u32 dims, f32 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_text;
  ModelParams<float> params;
};

void write_checkpoint(std::ostream& out, const ModelParams<float>& params,
                      const std::string& config_text);
// Rejects bad magic, unknown versions and truncation ("unexpected end of
// file at byte N"). Nothing is returned on failure.
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const std::string& config_text);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace mbfcn
