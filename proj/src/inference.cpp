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
#include "mbfcn/inference.hpp"

#include <algorithm>
#include <cmath>

#include "mbfcn/error.hpp"
#include "mbfcn/image.hpp"
#include "mbfcn/training.hpp"

namespace mbfcn {

std::vector<Detection> decode_detections(std::span<const HeadOutput<float>> heads,
                                         std::span<const AnchorSet> anchors, double score_thresh,
                                         double scale, std::size_t image_w, std::size_t image_h,
                                         const std::string& image_id) {
  if (heads.size() != anchors.size()) {
    throw ConfigError("decode_detections: " + std::to_string(heads.size()) + " heads but " +
                      std::to_string(anchors.size()) + " anchor sets");
  }
  std::vector<Detection> dets;
  const double w_lim = static_cast<double>(image_w);
  const double h_lim = static_cast<double>(image_h);
  for (std::size_t k = 0; k < heads.size(); ++k) {
    Tape<float> tape(false);
    const Tensor& probs = softmax_pair(tape, *heads[k].cls);
    const Tensor& reg = *heads[k].reg;
    const AnchorSet& set = anchors[k];
    const Shape& s = probs.shape();
    if (set.size() != s.h * s.w * (s.c / 2)) {
      throw ConfigError("decode_detections: anchor set size does not match branch output " +
                        s.str());
    }
    for (std::size_t i = 0; i < set.size(); ++i) {
      const std::size_t y = set.grid_y(i);
      const std::size_t x = set.grid_x(i);
      const std::size_t a = set.slot(i);
      const double score = probs.at(0, 2 * a + 1, y, x);
      if (!(score > score_thresh)) continue;
      const Deltas t = {reg.at(0, 4 * a, y, x), reg.at(0, 4 * a + 1, y, x),
                        reg.at(0, 4 * a + 2, y, x), reg.at(0, 4 * a + 3, y, x)};
      const Box b = decode(set.boxes[i], t);
      const double x0 = std::clamp(b.x / scale, 0.0, w_lim);
      const double y0 = std::clamp(b.y / scale, 0.0, h_lim);
      const double x1 = std::clamp(b.right() / scale, 0.0, w_lim);
      const double y1 = std::clamp(b.bottom() / scale, 0.0, h_lim);
      if (!(x1 > x0) || !(y1 > y0)) continue;
      dets.push_back({{x0, y0, x1 - x0, y1 - y0}, score, k, image_id});
    }
  }
  return dets;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x != b.box.x) return a.box.x < b.box.x;
    return a.box.y < b.box.y;
  });
  std::vector<Detection> kept;
  std::vector<bool> suppressed(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!suppressed[j] && iou(dets[i].box, dets[j].box) > iou_thresh) suppressed[j] = true;
    }
  }
  return kept;
}

Detector::Detector(ModelConfig config, ModelParams<float> params, std::size_t max_side)
    : config_(std::move(config)), params_(std::move(params)), max_side_(max_side) {
  check_params(config_, params_);
  for (auto& [name, e] : params_.entries) {
    if (e.tensor.requires_grad()) e.tensor = Tensor(e.tensor.shape(), e.tensor.values());
  }
  if (max_side_ == 0) throw ConfigError("detector max_side must be >= 1");
}

std::vector<Detection> Detector::candidates(const Tensor& image, double pyramid_scale,
                                            const std::string& image_id, double score_thresh,
                                            DetectStats* stats) const {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3 || s.h == 0 || s.w == 0) {
    throw ConfigError("detect: expected a (1,3,h,w) image, got " + s.str());
  }
  if (!(pyramid_scale > 0.0)) throw ConfigError("detect: pyramid scales must be positive");
  const double r = pyramid_scale * static_cast<double>(max_side_) /
                   static_cast<double>(std::max(s.h, s.w));
  const std::size_t h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.h * r)));
  const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.w * r)));
  Tensor input = pad_to_multiple(resize_bilinear(image, h, w), config_.input_multiple());

  Tape<float> tape(false);
  const std::vector<HeadOutput<float>> heads = forward(tape, input, config_, params_);
  if (stats) {
    stats->backbone_passes += tape.counter("backbone.pass");
    stats->backbone_convs += tape.counter("backbone.conv");
    stats->backbone_macs += tape.counter("backbone.macs");
  }
  std::vector<AnchorSet> anchors;
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const BranchConfig& br = config_.branches[k];
    const Shape& hs = heads[k].cls->shape();
    anchors.push_back(generate_anchors(hs.h, hs.w, br.target_stride, br.anchor_sizes, br.anchor_ratios));
  }
  return decode_detections(heads, anchors, score_thresh, r, s.w, s.h, image_id);
}

std::vector<Detection> Detector::detect(const Tensor& image, const std::string& image_id,
                                        const DetectOptions& options, DetectStats* stats) const {
  const double single[] = {1.0};
  return detect_pyramid(image, single, image_id, options, stats);
}

std::vector<Detection> Detector::detect_pyramid(const Tensor& image, std::span<const double> scales,
                                                const std::string& image_id,
                                                const DetectOptions& options,
                                                DetectStats* stats) const {
  if (scales.empty()) throw ConfigError("detect_pyramid: no scales given");
  std::vector<Detection> pooled;
  for (double sc : scales) {
    std::vector<Detection> c = candidates(image, sc, image_id, options.score_thresh, stats);
    pooled.insert(pooled.end(), c.begin(), c.end());
  }
  return nms(std::move(pooled), options.nms_thresh);
}

std::map<std::string, std::vector<Detection>> detect_dataset(const Detector& detector,
                                                             const Dataset& dataset,
                                                             std::span<const double> scales,
                                                             const DetectOptions& options,
                                                             DetectStats* stats) {
  std::map<std::string, std::vector<Detection>> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const AnnotatedImage img = dataset.get(i);
    out[img.image_id] = detector.detect_pyramid(img.pixels, scales, img.image_id, options, stats);
  }
  return out;
}

}  // namespace mbfcn
