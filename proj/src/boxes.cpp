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
#include "mbfcn/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mbfcn/error.hpp"

namespace mbfcn {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Deltas encode(const Box& gt, const Box& anchor) {
  if (!gt.valid() || !anchor.valid()) {
    throw InputError("encode: boxes must have positive width and height (gt " +
                     std::to_string(gt.w) + "x" + std::to_string(gt.h) + ", anchor " +
                     std::to_string(anchor.w) + "x" + std::to_string(anchor.h) + ")");
  }
  return {(gt.x - anchor.x) / anchor.w, (gt.y - anchor.y) / anchor.h, std::log(gt.w / anchor.w),
          std::log(gt.h / anchor.h)};
}

Box decode(const Box& anchor, const Deltas& t) {
  static const double kMaxLog = std::log(1000.0);
  const double tw = std::clamp(t[2], -kMaxLog, kMaxLog);
  const double th = std::clamp(t[3], -kMaxLog, kMaxLog);
  return {anchor.x + t[0] * anchor.w, anchor.y + t[1] * anchor.h, anchor.w * std::exp(tw),
          anchor.h * std::exp(th)};
}

AnchorSet generate_anchors(std::size_t map_h, std::size_t map_w, std::size_t stride,
                           std::span<const double> sizes, std::span<const double> ratios) {
  AnchorSet set;
  set.map_h = map_h;
  set.map_w = map_w;
  set.stride = stride;
  set.per_cell = sizes.size() * ratios.size();
  set.boxes.reserve(map_h * map_w * set.per_cell);
  for (std::size_t gy = 0; gy < map_h; ++gy) {
    for (std::size_t gx = 0; gx < map_w; ++gx) {
      const double cx = (static_cast<double>(gx) + 0.5) * static_cast<double>(stride);
      const double cy = (static_cast<double>(gy) + 0.5) * static_cast<double>(stride);
      for (double s : sizes) {
        for (double r : ratios) {
          const double w = s * std::sqrt(r);
          const double h = s / std::sqrt(r);
          set.boxes.push_back({cx - w / 2.0, cy - h / 2.0, w, h});
        }
      }
    }
  }
  return set;
}

std::size_t MatchResult::count(AnchorLabel label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

MatchResult match(const AnchorSet& anchors, std::span<const Box> gts,
                  const MatchThresholds& thresholds) {
  const std::size_t n = anchors.size();
  MatchResult m;
  m.labels.assign(n, AnchorLabel::negative);
  m.gt_index.assign(n, -1);
  m.targets.assign(n, Deltas{0.0, 0.0, 0.0, 0.0});
  if (gts.empty()) return m;

  std::vector<double> best_for_gt(gts.size(), 0.0);
  std::vector<std::size_t> best_anchor(gts.size(), 0);
  std::vector<bool> has_best(gts.size(), false);
  for (std::size_t i = 0; i < n; ++i) {
    const Box& a = anchors.boxes[i];
    double best = 0.0;
    int arg = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(a, gts[g]);
      if (arg < 0 || v > best) {
        best = v;
        arg = static_cast<int>(g);
      }
      if (v > 0.0 && (!has_best[g] || v > best_for_gt[g])) {
        best_for_gt[g] = v;
        best_anchor[g] = i;
        has_best[g] = true;
      }
    }
    if (best > thresholds.positive) {
      m.labels[i] = AnchorLabel::positive;
      m.gt_index[i] = arg;
    } else if (best < thresholds.negative) {
      m.labels[i] = AnchorLabel::negative;
    } else {
      m.labels[i] = AnchorLabel::ignored;
    }
  }

  std::vector<bool> forced(n, false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!has_best[g]) continue;
    const std::size_t i = best_anchor[g];
    if (forced[i]) continue;
    forced[i] = true;
    m.labels[i] = AnchorLabel::positive;
    m.gt_index[i] = static_cast<int>(g);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (m.labels[i] == AnchorLabel::positive) {
      m.targets[i] = encode(gts[static_cast<std::size_t>(m.gt_index[i])], anchors.boxes[i]);
    }
  }
  return m;
}

}  // namespace mbfcn
