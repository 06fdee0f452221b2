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
#include "mbfcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "mbfcn/error.hpp"
#include "mbfcn/image.hpp"
#include "mbfcn/log.hpp"

namespace mbfcn {

double TrainConfig::lambda_for(std::size_t branch) const {
  return lambda.size() == 1 ? lambda[0] : lambda.at(branch);
}

double TrainConfig::gamma_for(std::size_t branch) const {
  return gamma.size() == 1 ? gamma[0] : gamma.at(branch);
}

void TrainConfig::validate(std::size_t num_branches) const {
  if (!(neg_iou >= 0.0 && neg_iou < pos_iou && pos_iou <= 1.0)) {
    throw ConfigError("train: need 0 <= neg_iou < pos_iou <= 1 (neg_iou=" + std::to_string(neg_iou) +
                      ", pos_iou=" + std::to_string(pos_iou) + ")");
  }
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("train.flip_prob must lie in [0, 1]");
  if (batch_per_branch == 0) throw ConfigError("train.batch_per_branch must be >= 1");
  if (lr_decay_every == 0) throw ConfigError("train.lr_decay_every must be >= 1");
  if (max_side == 0) throw ConfigError("train.max_side must be >= 1");
  if (log_every == 0) throw ConfigError("train.log_every must be >= 1");
  if (checkpoint_every == 0) throw ConfigError("train.checkpoint_every must be >= 1");
  if (!(base_lr > 0.0)) throw ConfigError("train.base_lr must be positive");
  auto check_list = [&](const std::vector<double>& v, const char* key) {
    if (v.size() != 1 && v.size() != num_branches) {
      throw ConfigError(std::string("train.") + key + " needs 1 or " + std::to_string(num_branches) +
                        " values, got " + std::to_string(v.size()));
    }
    for (double x : v) {
      if (!(x >= 0.0)) throw ConfigError(std::string("train.") + key + " values must be >= 0");
    }
  };
  check_list(lambda, "lambda");
  check_list(gamma, "gamma");
}

double cls_loss(double prob_face, int label) {
  const double p = std::clamp(prob_face, kProbClamp, 1.0 - kProbClamp);
  return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double reg_loss(const Deltas& pred, const Deltas& target) {
  double s = 0.0;
  for (std::size_t j = 0; j < 4; ++j) s += smooth_l1(target[j] - pred[j]);
  return s;
}

LossReport total_loss(std::span<const std::vector<SampledAnchor>> branch_samples,
                      const TrainConfig& cfg) {
  LossReport report;
  for (std::size_t k = 0; k < branch_samples.size(); ++k) {
    const auto& samples = branch_samples[k];
    BranchLoss b;
    if (samples.empty()) {
      log_info("branch " + std::to_string(k + 1) + " has no sampled anchors; contributes 0");
      report.branches.push_back(b);
      continue;
    }
    double cls = 0.0;
    double reg = 0.0;
    for (const SampledAnchor& s : samples) {
      cls += cls_loss(s.prob_face, s.label);
      if (s.label == 1) {
        reg += reg_loss(s.pred, s.target);
        ++b.positives;
      } else {
        ++b.negatives;
      }
    }
    const double n = static_cast<double>(samples.size());
    b.cls = cls / n;
    b.reg = reg / n;
    report.total += cfg.gamma_for(k) * (b.cls + cfg.lambda_for(k) * b.reg);
    report.branches.push_back(b);
  }
  return report;
}

std::vector<std::size_t> ohem_sample(const MatchResult& match, std::span<const double> anchor_losses,
                                     const TrainConfig& cfg, Rng& rng) {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < match.labels.size(); ++i) {
    if (match.labels[i] == AnchorLabel::positive) positives.push_back(i);
    if (match.labels[i] == AnchorLabel::negative) negatives.push_back(i);
  }
  const std::size_t cap = cfg.batch_per_branch / 4;
  if (positives.size() > cap) {
    for (std::size_t i = 0; i < cap; ++i) {
      std::swap(positives[i], positives[i + rng.index(positives.size() - i)]);
    }
    positives.resize(cap);
    std::sort(positives.begin(), positives.end());
  }
  const std::size_t want = std::min(negatives.size(), cfg.batch_per_branch - positives.size());
  std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(want),
                    negatives.end(), [&](std::size_t a, std::size_t b) {
                      if (anchor_losses[a] != anchor_losses[b]) return anchor_losses[a] > anchor_losses[b];
                      return a < b;
                    });
  std::vector<std::size_t> out = std::move(positives);
  out.insert(out.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(want));
  return out;
}

Preprocessed preprocess(const Tensor& image, std::span<const Box> gts, std::size_t max_side,
                        double flip_prob, std::size_t pad_multiple, Rng& rng) {
  const Shape& s = image.shape();
  Preprocessed out;
  out.scale = static_cast<double>(max_side) / static_cast<double>(std::max(s.h, s.w));
  out.height = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.h * out.scale)));
  out.width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(s.w * out.scale)));
  Tensor resized = resize_bilinear(image, out.height, out.width);
  out.gts.reserve(gts.size());
  for (const Box& b : gts) {
    out.gts.push_back({b.x * out.scale, b.y * out.scale, b.w * out.scale, b.h * out.scale});
  }
  out.flipped = rng.uniform() < flip_prob;
  if (out.flipped) {
    resized = flip_horizontal(resized);
    const double width = static_cast<double>(out.width);
    for (Box& b : out.gts) b.x = width - b.x - b.w;
  }
  out.image = pad_to_multiple(resized, pad_multiple);
  return out;
}

double lr_at(std::size_t iter, const TrainConfig& cfg) {
  return cfg.base_lr * std::pow(cfg.lr_decay_factor, static_cast<double>(iter / cfg.lr_decay_every));
}

template <typename T>
std::vector<double> anchor_face_probs(const BasicTensor<T>& cls_map) {
  const Shape& s = cls_map.shape();
  const std::size_t a_count = s.c / 2;
  std::vector<double> probs(s.h * s.w * a_count);
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t a = 0; a < a_count; ++a) {
        const double l0 = cls_map.at(0, 2 * a, y, x);
        const double l1 = cls_map.at(0, 2 * a + 1, y, x);
        const double m = std::max(l0, l1);
        const double e0 = std::exp(l0 - m);
        const double e1 = std::exp(l1 - m);
        probs[(y * s.w + x) * a_count + a] = e1 / (e0 + e1);
      }
    }
  }
  return probs;
}

template <typename T>
std::vector<Deltas> anchor_deltas(const BasicTensor<T>& reg_map) {
  const Shape& s = reg_map.shape();
  const std::size_t a_count = s.c / 4;
  std::vector<Deltas> out(s.h * s.w * a_count);
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t a = 0; a < a_count; ++a) {
        Deltas& d = out[(y * s.w + x) * a_count + a];
        for (std::size_t j = 0; j < 4; ++j) d[j] = reg_map.at(0, 4 * a + j, y, x);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T>& detection_loss(Tape<T>& tape, std::span<const HeadOutput<T>> heads,
                               std::span<const BranchTargets> targets, const TrainConfig& cfg,
                               LossReport* report) {
  if (heads.size() != targets.size()) {
    throw ConfigError("detection_loss: " + std::to_string(heads.size()) + " heads but " +
                      std::to_string(targets.size()) + " target sets");
  }
  bool needs_grad = false;
  std::vector<std::vector<SampledAnchor>> samples(heads.size());
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const BasicTensor<T>& cls = *heads[k].cls;
    const BasicTensor<T>& reg = *heads[k].reg;
    needs_grad = needs_grad || cls.requires_grad() || reg.requires_grad();
    const std::size_t a_count = cls.shape().c / 2;
    const std::size_t w = cls.shape().w;
    for (std::size_t i : targets[k].sampled) {
      const std::size_t cell = i / a_count;
      const std::size_t a = i % a_count;
      const std::size_t y = cell / w;
      const std::size_t x = cell % w;
      SampledAnchor s;
      s.label = targets[k].match.labels[i] == AnchorLabel::positive ? 1 : 0;
      const double l0 = cls.at(0, 2 * a, y, x);
      const double l1 = cls.at(0, 2 * a + 1, y, x);
      const double m = std::max(l0, l1);
      const double e0 = std::exp(l0 - m);
      const double e1 = std::exp(l1 - m);
      s.prob_face = e1 / (e0 + e1);
      for (std::size_t j = 0; j < 4; ++j) s.pred[j] = reg.at(0, 4 * a + j, y, x);
      s.target = targets[k].match.targets[i];
      samples[k].push_back(s);
    }
  }
  LossReport r = total_loss(samples, cfg);
  BasicTensor<T>& out = tape.make({1, 1, 1, 1}, needs_grad);
  out[0] = static_cast<T>(r.total);
  if (report) *report = r;
  if (needs_grad) {
    std::vector<HeadOutput<T>> hs(heads.begin(), heads.end());
    std::vector<std::vector<std::size_t>> sampled;
    for (const BranchTargets& t : targets) sampled.push_back(t.sampled);
    tape.record([hs, sampled, samples, cfg, o = &out]() {
      const double g = o->grad()[0];
      for (std::size_t k = 0; k < hs.size(); ++k) {
        if (sampled[k].empty()) continue;
        BasicTensor<T>& cls = *hs[k].cls;
        BasicTensor<T>& reg = *hs[k].reg;
        const std::size_t a_count = cls.shape().c / 2;
        const std::size_t w = cls.shape().w;
        const std::size_t plane = cls.shape().h * w;
        const double scale = g * cfg.gamma_for(k) / static_cast<double>(sampled[k].size());
        const double lambda = cfg.lambda_for(k);
        for (std::size_t n = 0; n < sampled[k].size(); ++n) {
          const std::size_t i = sampled[k][n];
          const SampledAnchor& s = samples[k][n];
          const std::size_t cell = i / a_count;
          const std::size_t a = i % a_count;
          if (cls.requires_grad()) {
            const double p = s.prob_face;
            const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
            const double d = clamped ? 0.0 : scale * (p - s.label);
            cls.grad()[(2 * a + 1) * plane + cell] += static_cast<T>(d);
            cls.grad()[(2 * a) * plane + cell] -= static_cast<T>(d);
          }
          if (s.label == 1 && reg.requires_grad()) {
            for (std::size_t j = 0; j < 4; ++j) {
              const double diff = s.target[j] - s.pred[j];
              const double dsl1 = std::abs(diff) < 1.0 ? diff : (diff > 0.0 ? 1.0 : -1.0);
              reg.grad()[(4 * a + j) * plane + cell] -= static_cast<T>(scale * lambda * dsl1);
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
std::vector<BranchTargets> assign_targets(std::span<const HeadOutput<T>> heads,
                                          const ModelConfig& model, std::span<const Box> gts,
                                          const TrainConfig& cfg, Rng& rng) {
  std::vector<BranchTargets> targets;
  targets.reserve(heads.size());
  for (std::size_t k = 0; k < heads.size(); ++k) {
    const BranchConfig& br = model.branches[k];
    const Shape& s = heads[k].cls->shape();
    const AnchorSet anchors =
        generate_anchors(s.h, s.w, br.target_stride, br.anchor_sizes, br.anchor_ratios);
    BranchTargets t;
    t.match = match(anchors, gts, {cfg.pos_iou, cfg.neg_iou});
    const std::vector<double> probs = anchor_face_probs(*heads[k].cls);
    std::vector<double> losses(probs.size(), 0.0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (t.match.labels[i] == AnchorLabel::negative) losses[i] = cls_loss(probs[i], 0);
      if (t.match.labels[i] == AnchorLabel::positive) losses[i] = cls_loss(probs[i], 1);
    }
    t.sampled = ohem_sample(t.match, losses, cfg, rng);
    targets.push_back(std::move(t));
  }
  return targets;
}

void write_log_row(std::ostream& os, const TrainLogRow& row) {
  std::ostringstream line;
  line << row.iter << '\t' << std::setprecision(6) << row.lr;
  line << std::fixed << std::setprecision(6);
  for (const BranchLoss& b : row.branches) line << '\t' << b.cls << '\t' << b.reg;
  os << line.str() << '\n';
}

TrainResult train(const Dataset& dataset, const ModelConfig& model, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  model.validate();
  cfg.validate(model.branches.size());
  if (dataset.size() == 0) throw ConfigError("train: dataset is empty");

  TrainResult result;
  result.params = build_model<float>(model, cfg.seed);
  ModelParams<float>& params = result.params;
  params.enable_grad();
  std::vector<Tensor*> trainable = params.trainable();
  std::vector<Tensor> velocity;
  velocity.reserve(trainable.size());
  for (const Tensor* p : trainable) velocity.emplace_back(p->shape());

  Rng sample_rng(cfg.seed, 1);
  Rng augment_rng(cfg.seed, 2);
  Rng mining_rng(cfg.seed, 3);
  const std::size_t k_count = model.branches.size();

  TrainLogRow acc;
  acc.branches.assign(k_count, {});
  std::size_t acc_n = 0;

  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    const AnnotatedImage item = dataset.get(sample_rng.index(dataset.size()));
    const Preprocessed pre = preprocess(item.pixels, item.gts, cfg.max_side, cfg.flip_prob,
                                        model.input_multiple(), augment_rng);
    Tape<float> tape;
    Tensor image = pre.image;
    const std::vector<HeadOutput<float>> heads = forward(tape, image, model, params);
    const std::vector<BranchTargets> targets =
        assign_targets<float>(heads, model, pre.gts, cfg, mining_rng);
    LossReport report;
    Tensor& loss = detection_loss<float>(tape, heads, targets, cfg, &report);
    for (std::size_t k = 0; k < k_count; ++k) {
      const BranchLoss& b = report.branches[k];
      if (!std::isfinite(b.cls) || !std::isfinite(b.reg)) {
        throw NumericError("train: non-finite loss at iteration " + std::to_string(iter) +
                           " in branch " + std::to_string(k + 1) + " (cls=" + std::to_string(b.cls) +
                           ", reg=" + std::to_string(b.reg) + ")");
      }
    }
    tape.backward(loss);
    const double lr = lr_at(iter, cfg);
    sgd_step<float>(trainable, velocity, static_cast<float>(lr), static_cast<float>(cfg.momentum),
                    static_cast<float>(cfg.weight_decay));
    params.zero_grad();
    result.loss_history.push_back(report.total);

    for (std::size_t k = 0; k < k_count; ++k) {
      acc.branches[k].cls += report.branches[k].cls;
      acc.branches[k].reg += report.branches[k].reg;
      acc.branches[k].positives += report.branches[k].positives;
      acc.branches[k].negatives += report.branches[k].negatives;
    }
    acc.total += report.total;
    ++acc_n;
    const std::size_t done = iter + 1;
    if (done % cfg.log_every == 0 || done == cfg.max_iters) {
      TrainLogRow row;
      row.iter = done;
      row.lr = lr;
      const double n = static_cast<double>(acc_n);
      for (const BranchLoss& b : acc.branches) {
        row.branches.push_back({b.cls / n, b.reg / n, b.positives / acc_n, b.negatives / acc_n});
      }
      row.total = acc.total / n;
      result.log.push_back(row);
      if (hooks.on_log) hooks.on_log(row);
      acc = TrainLogRow{};
      acc.branches.assign(k_count, {});
      acc_n = 0;
    }
    if (hooks.on_checkpoint && (done % cfg.checkpoint_every == 0 || done == cfg.max_iters)) {
      hooks.on_checkpoint(done, params);
    }
  }
  return result;
}

#define MBFCN_INSTANTIATE_TRAINING(T)                                                             \
  template std::vector<double> anchor_face_probs(const BasicTensor<T>&);                          \
  template std::vector<Deltas> anchor_deltas(const BasicTensor<T>&);                              \
  template BasicTensor<T>& detection_loss(Tape<T>&, std::span<const HeadOutput<T>>,               \
                                          std::span<const BranchTargets>, const TrainConfig&,     \
                                          LossReport*);                                           \
  template std::vector<BranchTargets> assign_targets(std::span<const HeadOutput<T>>,              \
                                                     const ModelConfig&, std::span<const Box>,    \
                                                     const TrainConfig&, Rng&);

MBFCN_INSTANTIATE_TRAINING(float)
MBFCN_INSTANTIATE_TRAINING(double)

}  // namespace mbfcn
