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
#include "mbfcn/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "mbfcn/boxes.hpp"
#include "mbfcn/model.hpp"
#include "mbfcn/ops.hpp"
#include "mbfcn/rng.hpp"
#include "mbfcn/training.hpp"

namespace mbfcn {
namespace {

constexpr double kErrorFloor = 1e-6;

using Tensor64s = std::vector<Tensor64*>;
// Builds the scalar objective on the tape from the (external) inputs.
using Objective = std::function<Tensor64&(Tape<double>&)>;

Tensor64 random_tensor(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor64 t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<double> random_weights(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  return w;
}

// Compares d(objective)/d(input) for every entry of every input.
void check(GradcheckCase& out, const Tensor64s& inputs, const Objective& objective) {
  for (Tensor64* t : inputs) {
    t->enable_grad();
    t->zero_grad();
  }
  std::uint64_t base_sig = 0;
  {
    Tape<double> tape(true);
    tape.set_trace_kinks(true);
    Tensor64& loss = objective(tape);
    base_sig = tape.kink_signature();
    tape.backward(loss);
  }
  auto eval = [&](std::uint64_t& sig) {
    Tape<double> tape(false);
    tape.set_trace_kinks(true);
    const double v = objective(tape)[0];
    sig = tape.kink_signature();
    return v;
  };
  for (Tensor64* t : inputs) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double orig = (*t)[i];
      std::uint64_t sig_plus = 0, sig_minus = 0;
      (*t)[i] = orig + kGradcheckEps;
      const double plus = eval(sig_plus);
      (*t)[i] = orig - kGradcheckEps;
      const double minus = eval(sig_minus);
      (*t)[i] = orig;
      if (sig_plus != base_sig || sig_minus != base_sig) {
        ++out.skipped;
        continue;
      }
      const double numeric = (plus - minus) / (2.0 * kGradcheckEps);
      const double analytic = t->grad()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kErrorFloor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.coordinates;
    }
  }
  ++out.instances;
}

GradcheckCase check_conv(Rng& rng, std::size_t instances) {
  GradcheckCase c{"conv2d"};
  while (c.instances < instances) {
    const std::size_t n = 1 + rng.index(2), ci = 1 + rng.index(3), co = 1 + rng.index(3);
    const std::size_t k = 1 + rng.index(3);
    ConvGeom g{1 + rng.index(2), rng.index(3), 1 + rng.index(2)};
    const std::size_t h = 2 + rng.index(6), w = 2 + rng.index(6);
    if (conv_out_size(h, k, g) == 0 || conv_out_size(w, k, g) == 0) continue;
    Tensor64 x = random_tensor(rng, {n, ci, h, w});
    Tensor64 wt = random_tensor(rng, {co, ci, k, k});
    Tensor64 b = random_tensor(rng, {1, 1, 1, co});
    const std::vector<double> lw =
        random_weights(rng, n * co * conv_out_size(h, k, g) * conv_out_size(w, k, g));
    check(c, {&x, &wt, &b}, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, conv2d(tape, x, wt, b, g), std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_relu(Rng& rng, std::size_t instances) {
  GradcheckCase c{"relu"};
  while (c.instances < instances) {
    Tensor64 x = random_tensor(rng, {1 + rng.index(2), 1 + rng.index(3), 1 + rng.index(5), 1 + rng.index(5)});
    const std::vector<double> lw = random_weights(rng, x.size());
    check(c, {&x}, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, relu(tape, x), std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_pool(Rng& rng, std::size_t instances) {
  GradcheckCase c{"max_pool2d"};
  while (c.instances < instances) {
    const std::size_t k = 1 + rng.index(3), stride = 1 + rng.index(3);
    const std::size_t h = k + rng.index(5), w = k + rng.index(5);
    Tensor64 x = random_tensor(rng, {1 + rng.index(2), 1 + rng.index(3), h, w});
    const std::vector<double> lw =
        random_weights(rng, x.shape().n * x.shape().c * ((h - k) / stride + 1) * ((w - k) / stride + 1));
    check(c, {&x}, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, max_pool2d(tape, x, k, stride), std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_upsample(Rng& rng, std::size_t instances) {
  GradcheckCase c{"bilinear_upsample"};
  while (c.instances < instances) {
    const std::size_t f = 2 + rng.index(3);
    Tensor64 x = random_tensor(rng, {1 + rng.index(2), 1 + rng.index(3), 1 + rng.index(4), 1 + rng.index(4)});
    const std::vector<double> lw = random_weights(rng, x.size() * f * f);
    check(c, {&x}, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, bilinear_upsample(tape, x, f), std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_concat(Rng& rng, std::size_t instances) {
  GradcheckCase c{"concat_channels"};
  while (c.instances < instances) {
    const std::size_t n = 1 + rng.index(2), h = 1 + rng.index(4), w = 1 + rng.index(4);
    std::vector<Tensor64> parts;
    const std::size_t count = 1 + rng.index(3);
    std::size_t total = 0;
    for (std::size_t i = 0; i < count; ++i) {
      parts.push_back(random_tensor(rng, {n, 1 + rng.index(3), h, w}));
      total += parts.back().size();
    }
    Tensor64s ptrs;
    for (Tensor64& p : parts) ptrs.push_back(&p);
    const std::vector<double> lw = random_weights(rng, total);
    check(c, ptrs, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, concat_channels(tape, std::span<Tensor64* const>(ptrs)),
                          std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_softmax(Rng& rng, std::size_t instances) {
  GradcheckCase c{"softmax_pair"};
  while (c.instances < instances) {
    Tensor64 x = random_tensor(rng, {1 + rng.index(2), 2 * (1 + rng.index(3)), 1 + rng.index(4), 1 + rng.index(4)}, -3.0, 3.0);
    const std::vector<double> lw = random_weights(rng, x.size());
    check(c, {&x}, [&](Tape<double>& tape) -> Tensor64& {
      return weighted_sum(tape, softmax_pair(tape, x), std::span<const double>(lw));
    });
  }
  return c;
}

GradcheckCase check_composite(Rng& rng, std::size_t instances) {
  GradcheckCase c{"conv-relu-pool-upsample"};
  while (c.instances < instances) {
    const std::size_t h = 4 + rng.index(4), w = 4 + rng.index(4);
    Tensor64 x = random_tensor(rng, {1, 2, h, w});
    Tensor64 w1 = random_tensor(rng, {3, 2, 3, 3});
    Tensor64 b1 = random_tensor(rng, {1, 1, 1, 3}, -0.1, 0.1);
    Tensor64 w2 = random_tensor(rng, {2, 3, 1, 1});
    Tensor64 b2 = random_tensor(rng, {1, 1, 1, 2}, -0.1, 0.1);
    const std::size_t ph = h / 2, pw = w / 2;
    const std::vector<double> lw = random_weights(rng, 2 * (2 * ph) * (2 * pw));
    check(c, {&x, &w1, &b1, &w2, &b2}, [&](Tape<double>& tape) -> Tensor64& {
      Tensor64& a = relu(tape, conv2d(tape, x, w1, b1, {1, 1, 1}));
      Tensor64& p = max_pool2d(tape, a, 2, 2);
      Tensor64& q = conv2d(tape, p, w2, b2, {});
      Tensor64& s = softmax_pair(tape, bilinear_upsample(tape, q, 2));
      return weighted_sum(tape, s, std::span<const double>(lw));
    });
  }
  return c;
}

ModelConfig tiny_model() {
  ModelConfig m;
  m.backbone.widths = {3, 4, 4, 4};
  m.backbone.convs_per_stage = 1;
  m.branches.push_back({{Stage::C2, Stage::C3, Stage::C4, Stage::C5}, 8, 4, {6, 10}, {1.0}});
  m.branches.push_back({{Stage::C4, Stage::C5}, 16, 4, {14}, {1.0}});
  return m;
}

GradcheckCase check_model(Rng& rng, std::size_t instances) {
  GradcheckCase c{"detection-loss(tiny model)"};
  const ModelConfig model = tiny_model();
  TrainConfig cfg;
  cfg.batch_per_branch = 8;
  cfg.gamma = {1.0, 0.7};
  while (c.instances < instances) {
    ModelParams<double> params = build_model<double>(model, rng.next_u64());
    // Larger weights than the training init so every layer carries signal.
    for (auto& [name, e] : params.entries) {
      if (!e.trainable) continue;
      for (double& v : e.tensor.data()) v = rng.uniform(-0.6, 0.6);
    }
    Tensor64 image = random_tensor(rng, {1, 3, 16, 16}, 0.0, 1.0);
    std::vector<Box> gts;
    for (std::size_t g = 0, n = 1 + rng.index(2); g < n; ++g) {
      const double s = rng.uniform(5.0, 14.0);
      gts.push_back({rng.uniform(0.0, 16.0 - s), rng.uniform(0.0, 16.0 - s), s, s * rng.uniform(0.8, 1.2)});
    }
    std::vector<BranchTargets> targets;
    {
      Tape<double> tape(false);
      const auto heads = forward(tape, image, model, params);
      Rng mining(rng.next_u64());
      targets = assign_targets<double>(heads, model, gts, cfg, mining);
    }
    Tensor64s inputs = params.trainable();
    check(c, inputs, [&](Tape<double>& tape) -> Tensor64& {
      const auto heads = forward(tape, image, model, params);
      return detection_loss<double>(tape, heads, targets, cfg);
    });
  }
  return c;
}

}  // namespace

double GradcheckReport::max_rel_error() const {
  double m = 0.0;
  for (const GradcheckCase& c : cases) m = std::max(m, c.max_rel_error);
  return m;
}

bool GradcheckReport::passed(double tolerance) const {
  for (const GradcheckCase& c : cases) {
    if (!(c.max_rel_error < tolerance)) return false;
    // Nearly every coordinate must actually be compared.
    if (c.coordinates == 0 || c.skipped * 20 > c.coordinates) return false;
  }
  return !cases.empty();
}

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(options.seed, 7);
  GradcheckReport report;
  const std::size_t n = options.op_instances;
  report.cases.push_back(check_conv(rng, n));
  report.cases.push_back(check_relu(rng, n));
  report.cases.push_back(check_pool(rng, n));
  report.cases.push_back(check_upsample(rng, n));
  report.cases.push_back(check_concat(rng, n));
  report.cases.push_back(check_softmax(rng, n));
  report.cases.push_back(check_composite(rng, n));
  report.cases.push_back(check_model(rng, options.model_instances));
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace mbfcn
