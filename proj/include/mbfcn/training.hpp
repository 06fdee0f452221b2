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
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/dataset.hpp"
#include "mbfcn/model.hpp"
#include "mbfcn/rng.hpp"

namespace mbfcn {

struct TrainConfig {
  double base_lr = 0.001;
  std::size_t lr_decay_every = 30000;
  double lr_decay_factor = 0.1;
  std::size_t max_iters = 5000;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t batch_per_branch = 128;
  double pos_iou = 0.55;
  double neg_iou = 0.35;
  double flip_prob = 0.5;
  std::size_t max_side = 256;
  // One value applies to every branch; otherwise one value per branch.
  std::vector<double> lambda = {2.0};
  std::vector<double> gamma = {1.0};
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  std::size_t checkpoint_every = 1000;

  double lambda_for(std::size_t branch) const;
  double gamma_for(std::size_t branch) const;
  void validate(std::size_t num_branches) const;
  bool operator==(const TrainConfig&) const = default;
};

inline constexpr double kProbClamp = 1e-7;

// Negative log-likelihood of the face probability; p is clamped to
// [1e-7, 1 - 1e-7].
double cls_loss(double prob_face, int label);
double smooth_l1(double x);
// Sum of smooth_l1 over the four components of (target - pred).
double reg_loss(const Deltas& pred, const Deltas& target);

struct SampledAnchor {
  int label = 0;  // 1 face, 0 background
  double prob_face = 0.5;
  Deltas pred{};
  Deltas target{};
};

struct BranchLoss {
  double cls = 0.0;  // mean over the branch's sampled anchors
  double reg = 0.0;  // sum over positives divided by the same count
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct LossReport {
  std::vector<BranchLoss> branches;
  double total = 0.0;  // sum_k gamma_k * (cls_k + lambda_k * reg_k)
};

LossReport total_loss(std::span<const std::vector<SampledAnchor>> branch_samples,
                      const TrainConfig& cfg);

// Online hard negative mining. Keeps all positives up to batch/4 (a seeded
// random subset beyond that) and fills the rest of the batch with the
// highest-loss negatives (ties to the lower anchor index). Ignored anchors
// are never sampled. Output lists positives then negatives.
std::vector<std::size_t> ohem_sample(const MatchResult& match, std::span<const double> anchor_losses,
                                     const TrainConfig& cfg, Rng& rng);

struct Preprocessed {
  Tensor image;          // resized, maybe flipped, zero-padded
  std::vector<Box> gts;  // in the resized frame
  double scale = 1.0;    // resized / original
  bool flipped = false;
  std::size_t height = 0;  // resized size before padding
  std::size_t width = 0;
};

// Resize by max_side / max(w, h), flip with probability flip_prob (one
// uniform draw per call), then pad right/bottom to pad_multiple.
Preprocessed preprocess(const Tensor& image, std::span<const Box> gts, std::size_t max_side,
                        double flip_prob, std::size_t pad_multiple, Rng& rng);

double lr_at(std::size_t iter, const TrainConfig& cfg);

// Face probability and regression deltas of every anchor, in AnchorSet order.
template <typename T>
std::vector<double> anchor_face_probs(const BasicTensor<T>& cls_map);
template <typename T>
std::vector<Deltas> anchor_deltas(const BasicTensor<T>& reg_map);

struct BranchTargets {
  MatchResult match;
  std::vector<std::size_t> sampled;
};

// Multi-branch multi-task loss over the sampled anchors, recorded on the
// tape with its analytic adjoint into the cls and reg maps.
template <typename T>
BasicTensor<T>& detection_loss(Tape<T>& tape, std::span<const HeadOutput<T>> heads,
                               std::span<const BranchTargets> targets, const TrainConfig& cfg,
                               LossReport* report = nullptr);

// Labels, OHEM sampling and loss for one forward pass.
template <typename T>
std::vector<BranchTargets> assign_targets(std::span<const HeadOutput<T>> heads,
                                          const ModelConfig& model, std::span<const Box> gts,
                                          const TrainConfig& cfg, Rng& rng);

struct TrainLogRow {
  std::size_t iter = 0;  // iterations completed
  double lr = 0.0;
  std::vector<BranchLoss> branches;  // averaged over the report interval
  double total = 0.0;
};

// iter, lr, then cls and reg per branch, tab separated.
void write_log_row(std::ostream& os, const TrainLogRow& row);

struct TrainHooks {
  std::function<void(const TrainLogRow&)> on_log;
  std::function<void(std::size_t iter, const ModelParams<float>&)> on_checkpoint;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<TrainLogRow> log;
  std::vector<double> loss_history;  // total loss of every iteration
};

TrainResult train(const Dataset& dataset, const ModelConfig& model, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

}  // namespace mbfcn
