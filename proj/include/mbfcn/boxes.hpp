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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mbfcn {

// Axis-aligned rectangle given by its left-top corner and size, in pixels.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const { return w > 0.0 && h > 0.0; }
  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

// Regression parameterization relative to an anchor:
//   t = ((gx - ax) / aw, (gy - ay) / ah, ln(gw / aw), ln(gh / ah)).
using Deltas = std::array<double, 4>;

// Throws InputError when either box has a non-positive dimension.
Deltas encode(const Box& gt, const Box& anchor);
// Exact inverse of encode; log-size deltas are clamped to +-ln(1000).
Box decode(const Box& anchor, const Deltas& t);

// Anchors of one branch, ordered by (grid_y, grid_x, slot). Slots enumerate
// (size, ratio) pairs size-major.
struct AnchorSet {
  std::vector<Box> boxes;
  std::size_t map_h = 0;
  std::size_t map_w = 0;
  std::size_t per_cell = 0;
  std::size_t stride = 0;

  std::size_t size() const { return boxes.size(); }
  std::size_t grid_y(std::size_t i) const { return i / per_cell / map_w; }
  std::size_t grid_x(std::size_t i) const { return (i / per_cell) % map_w; }
  std::size_t slot(std::size_t i) const { return i % per_cell; }
};

AnchorSet generate_anchors(std::size_t map_h, std::size_t map_w, std::size_t stride,
                           std::span<const double> sizes, std::span<const double> ratios);

enum class AnchorLabel : std::int8_t { ignored = -1, negative = 0, positive = 1 };

struct MatchResult {
  std::vector<AnchorLabel> labels;
  std::vector<int> gt_index;     // -1 unless positive
  std::vector<Deltas> targets;   // zero unless positive

  std::size_t count(AnchorLabel label) const;
};

struct MatchThresholds {
  double positive = 0.55;  // strictly greater is positive
  double negative = 0.35;  // strictly less is negative
};

// Label anchors against ground truth. Positives take their highest-IoU GT
// (ties to the lowest GT index). In addition each GT forces its single best
// anchor (ties to the lowest anchor index) positive when that IoU is > 0;
// when two GTs share a best anchor the lower GT index keeps it.
MatchResult match(const AnchorSet& anchors, std::span<const Box> gts,
                  const MatchThresholds& thresholds = {});

}  // namespace mbfcn
