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
#include "mbfcn/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "mbfcn/error.hpp"

namespace mbfcn {

std::vector<bool> match_det_gt(std::span<const Box> dets, std::span<const Box> gts,
                               double iou_thresh) {
  std::vector<bool> tp(dets.size(), false);
  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t d = 0; d < dets.size(); ++d) {
    double best = -1.0;
    std::size_t arg = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      const double v = iou(dets[d], gts[g]);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    if (arg < gts.size() && best >= iou_thresh) {
      claimed[arg] = true;
      tp[d] = true;
    }
  }
  return tp;
}

void sort_outcomes(std::vector<Outcome>& outcomes) {
  std::stable_sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) {
    if (a.score != b.score) return a.score > b.score;
    return !a.tp && b.tp;
  });
}

EvalCurve build_curve(std::vector<Outcome> outcomes, std::size_t n_gt) {
  sort_outcomes(outcomes);
  EvalCurve curve;
  curve.n_gt = n_gt;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].tp) ++tp;
    curve.recall.push_back(n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0);
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
  }
  if (n_gt == 0) {
    curve.ap = outcomes.empty() ? 1.0 : 0.0;
  } else {
    // Envelope from the right, then sum precision over recall increments.
    std::vector<double> env = curve.precision;
    for (std::size_t i = env.size(); i-- > 1;) env[i - 1] = std::max(env[i - 1], env[i]);
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i) {
      curve.ap += (curve.recall[i] - prev_recall) * env[i];
      prev_recall = curve.recall[i];
    }
  }
  curve.outcomes = std::move(outcomes);
  return curve;
}

double average_precision(std::vector<Outcome> outcomes, std::size_t n_gt) {
  return build_curve(std::move(outcomes), n_gt).ap;
}

FpOperatingPoint precision_at_fp(std::vector<Outcome> outcomes, std::size_t n_gt, std::size_t n_fp) {
  if (n_fp == 0) throw ConfigError("precision_at_fp: n_fp must be >= 1");
  sort_outcomes(outcomes);
  FpOperatingPoint pt;
  for (const Outcome& o : outcomes) {
    if (o.tp) {
      ++pt.tp;
    } else {
      ++pt.fp;
    }
    if (pt.fp == n_fp) break;
  }
  const std::size_t n = pt.tp + pt.fp;
  pt.precision = n ? static_cast<double>(pt.tp) / static_cast<double>(n) : 0.0;
  pt.recall = n_gt ? static_cast<double>(pt.tp) / static_cast<double>(n_gt) : 0.0;
  return pt;
}

Subset parse_subset(std::string_view name) {
  if (name == "easy") return Subset::easy;
  if (name == "medium") return Subset::medium;
  if (name == "hard") return Subset::hard;
  if (name == "all") return Subset::all;
  throw ConfigError("unknown subset '" + std::string(name) + "' (expected easy, medium, hard or all)");
}

std::string_view subset_name(Subset subset) {
  switch (subset) {
    case Subset::easy:
      return "easy";
    case Subset::medium:
      return "medium";
    case Subset::hard:
      return "hard";
    case Subset::all:
      return "all";
  }
  return "all";
}

HeightBand subset_band(Subset subset) {
  switch (subset) {
    case Subset::easy:
      return {50.0};
    case Subset::medium:
      return {30.0};
    case Subset::hard:
      return {10.0};
    case Subset::all:
      return {-std::numeric_limits<double>::infinity()};
  }
  return {};
}

SubsetGts subset_filter(std::span<const Box> gts, const HeightBand& band) {
  SubsetGts out;
  for (const Box& b : gts) (band.contains(b.h) ? out.kept : out.ignored).push_back(b);
  return out;
}

EvalCurve evaluate(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                   const HeightBand& band, double iou_thresh) {
  std::vector<Outcome> outcomes;
  std::size_t n_gt = 0;
  static const std::vector<Box> kNone;
  static const std::vector<Detection> kNoDets;
  std::vector<std::string> ids;
  for (const auto& [id, g] : gts) ids.push_back(id);
  for (const auto& [id, d] : dets) {
    if (!gts.count(id)) ids.push_back(id);
  }
  for (const std::string& id : ids) {
    auto git = gts.find(id);
    const SubsetGts sub = subset_filter(git == gts.end() ? kNone : git->second, band);
    n_gt += sub.kept.size();
    auto dit = dets.find(id);
    std::vector<Detection> ds = dit == dets.end() ? kNoDets : dit->second;
    std::stable_sort(ds.begin(), ds.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Box> boxes;
    boxes.reserve(ds.size());
    for (const Detection& d : ds) boxes.push_back(d.box);
    const std::vector<bool> tp = match_det_gt(boxes, sub.kept, iou_thresh);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!tp[i]) {
        const bool on_ignored = std::any_of(sub.ignored.begin(), sub.ignored.end(), [&](const Box& g) {
          return iou(boxes[i], g) >= iou_thresh;
        });
        if (on_ignored) continue;
      }
      outcomes.push_back({ds[i].score, tp[i]});
    }
  }
  return build_curve(std::move(outcomes), n_gt);
}

GroundTruthByImage dataset_ground_truth(const Dataset& dataset) {
  GroundTruthByImage out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    AnnotatedImage img = dataset.get(i);
    out[img.image_id] = std::move(img.gts);
  }
  return out;
}

SubsetAps subset_aps(const DetectionsByImage& dets, const GroundTruthByImage& gts) {
  return {evaluate(dets, gts, subset_band(Subset::easy)).ap,
          evaluate(dets, gts, subset_band(Subset::medium)).ap,
          evaluate(dets, gts, subset_band(Subset::hard)).ap,
          evaluate(dets, gts, subset_band(Subset::all)).ap};
}

void write_pr_curve(std::ostream& os, const EvalCurve& curve) {
  os << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < curve.recall.size(); ++i) {
    os << curve.recall[i] << '\t' << curve.precision[i] << '\n';
  }
}

}  // namespace mbfcn
