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
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/dataset.hpp"
#include "mbfcn/inference.hpp"

namespace mbfcn {

inline constexpr double kEvalIou = 0.5;

struct Outcome {
  double score = 0.0;
  bool tp = false;
};

// Greedy claim in the given (score-descending) order: each detection takes
// the unclaimed GT with the highest IoU if that IoU >= iou_thresh.
std::vector<bool> match_det_gt(std::span<const Box> dets, std::span<const Box> gts,
                               double iou_thresh = kEvalIou);

// Score descending; equal scores put false positives first.
void sort_outcomes(std::vector<Outcome>& outcomes);

struct EvalCurve {
  std::vector<Outcome> outcomes;  // sorted
  std::vector<double> recall;
  std::vector<double> precision;
  double ap = 0.0;
  std::size_t n_gt = 0;
};

EvalCurve build_curve(std::vector<Outcome> outcomes, std::size_t n_gt);

// All-point interpolated AP. With n_gt == 0 the AP is 1 when there are no
// detections and 0 otherwise.
double average_precision(std::vector<Outcome> outcomes, std::size_t n_gt);

struct FpOperatingPoint {
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

// Truncates the score-sorted list at the n_fp-th false positive (or its end).
FpOperatingPoint precision_at_fp(std::vector<Outcome> outcomes, std::size_t n_gt, std::size_t n_fp);

enum class Subset { easy, medium, hard, all };

Subset parse_subset(std::string_view name);
std::string_view subset_name(Subset subset);

// Ground truth heights in (above, up_to] are evaluated; others are ignored.
struct HeightBand {
  double above = 0.0;
  double up_to = std::numeric_limits<double>::infinity();
  bool contains(double height) const { return height > above && height <= up_to; }
};

// easy: > 50, medium: > 30, hard: > 10, all: every face.
HeightBand subset_band(Subset subset);

struct SubsetGts {
  std::vector<Box> kept;
  std::vector<Box> ignored;
};

SubsetGts subset_filter(std::span<const Box> gts, const HeightBand& band);

using DetectionsByImage = std::map<std::string, std::vector<Detection>>;
using GroundTruthByImage = std::map<std::string, std::vector<Box>>;

// Per image: match detections to the kept faces, drop unmatched detections
// that overlap an ignored face by >= iou_thresh, then pool all outcomes.
EvalCurve evaluate(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                   const HeightBand& band, double iou_thresh = kEvalIou);

GroundTruthByImage dataset_ground_truth(const Dataset& dataset);

struct SubsetAps {
  double easy = 0.0;
  double medium = 0.0;
  double hard = 0.0;
  double all = 0.0;
};

SubsetAps subset_aps(const DetectionsByImage& dets, const GroundTruthByImage& gts);

// "recall<TAB>precision" per line.
void write_pr_curve(std::ostream& os, const EvalCurve& curve);

}  // namespace mbfcn
