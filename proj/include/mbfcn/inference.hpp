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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/dataset.hpp"
#include "mbfcn/model.hpp"

namespace mbfcn {

struct Detection {
  Box box;  // original-image pixels
  double score = 0.0;
  std::size_t branch = 0;
  std::string image_id;
};

// Keeps anchors whose face probability exceeds score_thresh, decodes their
// deltas, maps coordinates back by 1/scale and clips to the image.
std::vector<Detection> decode_detections(std::span<const HeadOutput<float>> heads,
                                         std::span<const AnchorSet> anchors, double score_thresh,
                                         double scale, std::size_t image_w, std::size_t image_h,
                                         const std::string& image_id = {});

// Greedy suppression over the pooled set. Order: score descending, then
// smaller x, then smaller y. A detection is dropped when its IoU with an
// already kept one is strictly greater than iou_thresh.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh);

struct DetectOptions {
  double score_thresh = 0.05;
  double nms_thresh = 0.3;
};

struct DetectStats {
  std::size_t backbone_passes = 0;
  std::size_t backbone_convs = 0;
  std::size_t backbone_macs = 0;
};

// Trained model plus the resize rule it was trained with. Parameters carry
// no gradient slots, so detection never writes to them and a Detector may
// be shared across threads.
class Detector {
 public:
  Detector(ModelConfig config, ModelParams<float> params, std::size_t max_side);

  const ModelConfig& config() const { return config_; }
  std::size_t max_side() const { return max_side_; }

  std::vector<Detection> detect(const Tensor& image, const std::string& image_id,
                                const DetectOptions& options, DetectStats* stats = nullptr) const;
  // Runs the pre-NMS stage once per scale, pools everything and applies a
  // single global NMS.
  std::vector<Detection> detect_pyramid(const Tensor& image, std::span<const double> scales,
                                        const std::string& image_id, const DetectOptions& options,
                                        DetectStats* stats = nullptr) const;
  // Pre-NMS detections at one pyramid scale (1.0 = the training resize).
  std::vector<Detection> candidates(const Tensor& image, double pyramid_scale,
                                    const std::string& image_id, double score_thresh,
                                    DetectStats* stats = nullptr) const;

 private:
  ModelConfig config_;
  mutable ModelParams<float> params_;
  std::size_t max_side_;
};

// Detections for every image of a dataset, keyed by image id.
std::map<std::string, std::vector<Detection>> detect_dataset(const Detector& detector,
                                                             const Dataset& dataset,
                                                             std::span<const double> scales,
                                                             const DetectOptions& options,
                                                             DetectStats* stats = nullptr);

}  // namespace mbfcn
