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
// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when a gating criterion fails. Progress goes to stderr.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/error.hpp"
#include "mbfcn/eval.hpp"
#include "mbfcn/gradcheck.hpp"
#include "mbfcn/inference.hpp"
#include "mbfcn/io.hpp"
#include "mbfcn/log.hpp"
#include "mbfcn/rng.hpp"
#include "mbfcn/synth.hpp"
#include "mbfcn/training.hpp"

namespace mbfcn {
namespace {

constexpr std::uint64_t kDataSeed = 2026;
constexpr std::uint64_t kTrainSeed = 7;
constexpr std::size_t kTrainImages = 1500;
constexpr std::size_t kValImages = 300;
const HeightBand kSmallBand{10.0, 30.0};

struct Verdict {
  bool pass = false;
  bool gating = true;
  std::string detail;
};

void info(const std::string& msg) {
  std::fprintf(stderr, "%s\n", msg.c_str());
  std::fflush(stderr);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Training recipe used for every end-to-end run.
TrainConfig toy_recipe() {
  TrainConfig cfg;
  cfg.max_iters = 5000;
  cfg.max_side = 256;
  cfg.base_lr = 0.01;
  cfg.lr_decay_every = 3500;
  cfg.log_every = 250;
  cfg.seed = kTrainSeed;
  return cfg;
}

BranchConfig make_branch(std::vector<Stage> sources, std::size_t stride, std::vector<double> sizes) {
  BranchConfig b;
  b.sources = std::move(sources);
  b.target_stride = stride;
  b.anchor_sizes = std::move(sizes);
  return b;
}

ModelConfig single_branch_c45() {
  ModelConfig m;
  // The lone branch carries every anchor size of the two-branch model.
  m.branches = {make_branch({Stage::C4, Stage::C5}, 16, {12, 16, 24, 32, 48, 64, 96, 128, 192})};
  return m;
}

ModelConfig three_branch() {
  ModelConfig m = ModelConfig::default_two_branch();
  m.branches.push_back(make_branch({Stage::C4, Stage::C5}, 32, {128, 192}));
  return m;
}

struct RunOutcome {
  TrainResult trained;
  DetectionsByImage dets;
  SubsetAps aps;
  double small_band_ap = 0.0;
  double train_seconds = 0.0;
  double total_seconds = 0.0;
};

// Nesting of every evaluation: hard keeps a superset of medium, medium of easy.
bool nested_subsets(const GroundTruthByImage& gts) {
  for (const auto& [id, g] : gts) {
    const auto e = subset_filter(g, subset_band(Subset::easy)).kept;
    const auto m = subset_filter(g, subset_band(Subset::medium)).kept;
    const auto h = subset_filter(g, subset_band(Subset::hard)).kept;
    for (const Box& b : e) {
      if (std::find(m.begin(), m.end(), b) == m.end()) return false;
    }
    for (const Box& b : m) {
      if (std::find(h.begin(), h.end(), b) == h.end()) return false;
    }
  }
  return true;
}

class Acceptance {
 public:
  Acceptance() {
    SyntheticSpec spec;
    spec.seed = kDataSeed;
    spec.image_size = 128;
    spec.face_min = 10;
    spec.face_max = 96;
    std::size_t dropped = 0;
    const LogSink previous = set_log_sink([&](LogLevel level, std::string_view) {
      if (level == LogLevel::warning) ++dropped;
    });
    train_set_ = synth_dataset(spec, 0, kTrainImages);
    val_set_ = synth_dataset(spec, kTrainImages, kValImages);
    set_log_sink(previous);
    val_gts_ = dataset_ground_truth(val_set_);
    std::size_t faces = 0;
    for (const auto& [id, g] : val_gts_) faces += g.size();
    info("data: " + std::to_string(kTrainImages) + " train / " + std::to_string(kValImages) +
         " val images, " + std::to_string(faces) + " val faces, " + std::to_string(dropped) +
         " faces dropped by placement");
  }

  void run() {
    verdicts_.resize(11);
    criterion1();
    criterion2();
    criterion3();
    criterion9();
    const RunOutcome two = train_and_eval("C345(8)-C45(16)", ModelConfig::default_two_branch());
    criterion6(two);
    criterion5(two);
    const RunOutcome repeat = train_and_eval("C345(8)-C45(16) repeat", ModelConfig::default_two_branch());
    criterion10(two, repeat);
    const RunOutcome one = train_and_eval("C45(16)", single_branch_c45());
    criterion7(two, one);
    const RunOutcome three = train_and_eval("C345(8)-C45(16)-C45(32)", three_branch());
    criterion8(two, three);
    criterion4();
  }

  int report() const {
    bool ok = true;
    std::printf("\n");
    for (std::size_t c = 1; c <= 10; ++c) {
      const Verdict& v = verdicts_[c];
      const char* tag = v.pass ? "PASS" : (v.gating ? "FAIL" : "FAIL (report only)");
      std::printf("criterion %zu: %s  %s\n", c, tag, v.detail.c_str());
      if (v.gating && !v.pass) ok = false;
    }
    std::fflush(stdout);
    return ok ? 0 : 1;
  }

 private:
  RunOutcome train_and_eval(const std::string& label, const ModelConfig& model) {
    RunOutcome out;
    const auto t0 = std::chrono::steady_clock::now();
    TrainHooks hooks;
    hooks.on_log = [&](const TrainLogRow& row) {
      if (row.iter % 1000 == 0) info(label + ": iter " + std::to_string(row.iter) + " loss " + fmt("%.4f", row.total));
    };
    out.trained = train(train_set_, model, toy_recipe(), hooks);
    out.train_seconds = seconds_since(t0);
    const Detector detector(model, out.trained.params, toy_recipe().max_side);
    const double one[] = {1.0};
    out.dets = detect_dataset(detector, val_set_, one, {});
    out.aps = subset_aps(out.dets, val_gts_);
    out.small_band_ap = evaluate(out.dets, val_gts_, kSmallBand).ap;
    out.total_seconds = seconds_since(t0);
    nesting_ok_ = nesting_ok_ && nested_subsets(val_gts_) && nested_counts(out.dets);
    ++evaluations_;
    info(label + ": train " + fmt("%.1f", out.train_seconds) + "s, AP easy " + fmt("%.4f", out.aps.easy) +
         " medium " + fmt("%.4f", out.aps.medium) + " hard " + fmt("%.4f", out.aps.hard) + " all " +
         fmt("%.4f", out.aps.all) + " band(10,30] " + fmt("%.4f", out.small_band_ap));
    return out;
  }

  bool nested_counts(const DetectionsByImage& dets) const {
    const std::size_t e = evaluate(dets, val_gts_, subset_band(Subset::easy)).n_gt;
    const std::size_t m = evaluate(dets, val_gts_, subset_band(Subset::medium)).n_gt;
    const std::size_t h = evaluate(dets, val_gts_, subset_band(Subset::hard)).n_gt;
    return h >= m && m >= e;
  }

  void criterion1() {
    const GradcheckReport r = run_gradcheck();
    double worst = 0.0;
    std::size_t compared = 0;
    for (const GradcheckCase& c : r.cases) {
      worst = std::max(worst, c.max_rel_error);
      compared += c.coordinates;
    }
    verdicts_[1] = {r.passed() && r.seconds < 60.0, true,
                    "max rel error " + fmt("%.2e", worst) + " over " + std::to_string(compared) +
                        " coordinates in " + std::to_string(r.cases.size()) + " cases, " +
                        fmt("%.1f", r.seconds) + "s"};
  }

  void criterion2() {
    bool ok = smooth_l1(0.5) == 0.125 && smooth_l1(2.0) == 1.5 &&
              std::abs(cls_loss(0.5, 1) - std::log(2.0)) < 1e-12 &&
              std::abs(cls_loss(0.5, 0) - std::log(2.0)) < 1e-12;
    Rng rng(2);
    double worst = 0.0;
    TrainConfig cfg;
    cfg.gamma = {1.0};
    cfg.lambda = {2.0};
    for (int t = 0; t < 500; ++t) {
      std::vector<std::vector<SampledAnchor>> samples(1 + rng.index(3));
      double want = 0.0;
      for (auto& branch : samples) {
        double sum = 0.0;
        for (std::size_t n = 0, count = 1 + rng.index(128); n < count; ++n) {
          SampledAnchor s;
          s.label = rng.index(4) == 0;
          s.prob_face = rng.uniform(0.001, 0.999);
          for (int j = 0; j < 4; ++j) {
            s.pred[j] = rng.uniform(-2, 2);
            s.target[j] = rng.uniform(-2, 2);
          }
          double term = s.label ? -std::log(s.prob_face) : -std::log(1.0 - s.prob_face);
          if (s.label) {
            for (int j = 0; j < 4; ++j) {
              const double d = std::abs(s.target[j] - s.pred[j]);
              term += 2.0 * (d < 1.0 ? 0.5 * d * d : d - 0.5);
            }
          }
          sum += term;
          branch.push_back(s);
        }
        want += sum / static_cast<double>(branch.size());
      }
      worst = std::max(worst, std::abs(total_loss(samples, cfg).total - want));
    }
    ok = ok && worst < 1e-6;
    verdicts_[2] = {ok, true,
                    "smooth_l1(0.5)=" + fmt("%.6f", smooth_l1(0.5)) + " smooth_l1(2)=" +
                        fmt("%.6f", smooth_l1(2.0)) + " cls_loss(0.5)=" + fmt("%.6f", cls_loss(0.5, 1)) +
                        ", total_loss max deviation " + fmt("%.2e", worst) + " over 500 instances"};
  }

  void criterion3() {
    Rng rng(3);
    const std::size_t instances = 300;
    std::size_t nms_bad = 0;
    std::size_t match_bad = 0;
    std::size_t claim_bad = 0;
    for (std::size_t t = 0; t < instances; ++t) {
      // NMS
      std::vector<Detection> dets;
      for (std::size_t i = 0, n = rng.index(50); i < n; ++i) {
        Detection d;
        d.box = {std::floor(rng.uniform(0, 40)), std::floor(rng.uniform(0, 40)),
                 1 + std::floor(rng.uniform(0, 20)), 1 + std::floor(rng.uniform(0, 20))};
        d.score = std::floor(rng.uniform(1, 10)) / 10.0;
        dets.push_back(d);
      }
      const auto got = nms(dets, 0.3);
      const auto want = oracle_nms(dets, 0.3);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].box == want[i].box && got[i].score == want[i].score;
      }
      if (!same) ++nms_bad;

      // Anchor matching
      const std::vector<double> sizes{8, 12, 18};
      const std::vector<double> ratios{1};
      const AnchorSet anchors = generate_anchors(2 + rng.index(5), 2 + rng.index(5), 8, sizes, ratios);
      std::vector<Box> gts;
      for (std::size_t i = 0, n = rng.index(6); i < n; ++i) {
        gts.push_back({std::floor(rng.uniform(-4, 40)), std::floor(rng.uniform(-4, 40)),
                       1 + std::floor(rng.uniform(0, 30)), 1 + std::floor(rng.uniform(0, 30))});
      }
      const MatchResult m = match(anchors, gts);
      std::vector<AnchorLabel> labels;
      std::vector<int> index;
      oracle_match(anchors, gts, labels, index);
      if (m.labels != labels || m.gt_index != index) ++match_bad;

      // Detection to ground-truth claiming
      std::vector<Box> boxes;
      for (std::size_t i = 0, n = rng.index(10); i < n; ++i) {
        if (!gts.empty() && rng.index(2)) {
          const Box& g = gts[rng.index(gts.size())];
          boxes.push_back({g.x + std::floor(rng.uniform(-2, 2)), g.y, g.w, g.h});
        } else {
          boxes.push_back({std::floor(rng.uniform(0, 40)), std::floor(rng.uniform(0, 40)),
                           1 + std::floor(rng.uniform(0, 30)), 1 + std::floor(rng.uniform(0, 30))});
        }
      }
      if (match_det_gt(boxes, gts) != oracle_claim(boxes, gts, kEvalIou)) ++claim_bad;
    }
    verdicts_[3] = {nms_bad == 0 && match_bad == 0 && claim_bad == 0, true,
                    std::to_string(instances) + " instances each; mismatches nms=" + std::to_string(nms_bad) +
                        " match=" + std::to_string(match_bad) + " match_det_gt=" + std::to_string(claim_bad)};
  }

  void criterion4() {
    const std::vector<Outcome> tft{{0.9, true}, {0.8, false}, {0.7, true}};
    const std::vector<Outcome> ttf{{0.9, true}, {0.8, true}, {0.7, false}};
    const double ap = average_precision(tft, 2);
    const double p1 = precision_at_fp(ttf, 2, 1).precision;
    const bool ok = std::abs(ap - 0.833333) <= 1e-6 && std::abs(p1 - 0.666667) <= 1e-6 && nesting_ok_ &&
                    evaluations_ > 0;
    verdicts_[4] = {ok, true,
                    "AP(TP,FP,TP)=" + fmt("%.6f", ap) + " P@1fp(TP,TP,FP)=" + fmt("%.6f", p1) +
                        ", subsets nested in " + std::to_string(evaluations_) + "/" +
                        std::to_string(evaluations_) + " evaluations" + (nesting_ok_ ? "" : " (VIOLATED)")};
  }

  void criterion5(const RunOutcome& run) {
    std::vector<std::string> problems;
    // Checkpoint
    std::ostringstream ck;
    write_checkpoint(ck, run.trained.params, "name = acceptance\n");
    const std::string bytes = ck.str();
    std::istringstream in(bytes);
    const Checkpoint back = read_checkpoint(in);
    bool same = back.params.entries.size() == run.trained.params.entries.size();
    for (const auto& [name, e] : run.trained.params.entries) {
      const auto it = back.params.entries.find(name);
      same = same && it != back.params.entries.end() && it->second.tensor.shape() == e.tensor.shape() &&
             std::memcmp(it->second.tensor.values().data(), e.tensor.values().data(),
                         e.tensor.size() * sizeof(float)) == 0;
    }
    if (!same) problems.push_back("checkpoint differs");
    std::size_t truncations = 0;
    for (std::size_t cut : {std::size_t{2}, bytes.size() / 3, bytes.size() - 1}) {
      std::istringstream cut_in(bytes.substr(0, cut));
      try {
        read_checkpoint(cut_in);
      } catch (const FormatError& e) {
        if (std::string(e.what()).find("unexpected end of file") != std::string::npos) ++truncations;
      }
    }
    if (truncations != 3) problems.push_back("truncation not rejected");

    // Detections, six decimals
    std::ostringstream det_out;
    write_detections(det_out, run.dets);
    std::istringstream det_in(det_out.str());
    const DetectionsByImage dets = parse_detections(det_in);
    double worst = 0.0;
    std::size_t n_dets = 0;
    for (const auto& [id, list] : run.dets) {
      const auto& other = dets.at(id);
      if (other.size() != list.size()) {
        worst = INFINITY;
        continue;
      }
      for (std::size_t i = 0; i < list.size(); ++i) {
        const Detection& a = list[i];
        const Detection& b = other[i];
        worst = std::max({worst, std::abs(a.box.x - b.box.x), std::abs(a.box.y - b.box.y),
                          std::abs(a.box.w - b.box.w), std::abs(a.box.h - b.box.h), std::abs(a.score - b.score)});
        ++n_dets;
      }
    }
    if (!(worst <= 5e-7 + 1e-12)) problems.push_back("detection round-trip error " + fmt("%.2e", worst));

    // Annotations, exact
    std::vector<AnnotationRecord> records;
    for (const auto& [id, g] : val_gts_) records.push_back({id, g});
    std::ostringstream ann_out;
    write_annotations(ann_out, records);
    std::istringstream ann_in(ann_out.str());
    if (parse_annotations(ann_in, AnnotationFormat::internal) != records) problems.push_back("annotations differ");

    std::string detail = "checkpoint " + std::to_string(bytes.size()) + " bytes bit-identical, " +
                         std::to_string(n_dets) + " detections within " + fmt("%.1e", worst) + ", " +
                         std::to_string(records.size()) + " annotation records exact, truncation rejected";
    for (const std::string& p : problems) detail += "; " + p;
    verdicts_[5] = {problems.empty(), true, problems.empty() ? detail : "problems: " + detail};
  }

  void criterion6(const RunOutcome& run) {
    const bool ok = run.aps.all >= 0.80 && run.total_seconds <= 30 * 60;
    verdicts_[6] = {ok, true,
                    "overall AP " + fmt("%.4f", run.aps.all) + " (need >= 0.80), 5000 iterations, " +
                        fmt("%.0f", run.total_seconds) + "s on 1 core (limit 1800s)"};
  }

  void criterion7(const RunOutcome& two, const RunOutcome& one) {
    const double gap = two.small_band_ap - one.small_band_ap;
    const double easy = std::abs(two.aps.easy - one.aps.easy);
    verdicts_[7] = {gap >= 0.05 && easy <= 0.05, true,
                    "faces (10,30] px: two-branch " + fmt("%.4f", two.small_band_ap) + " vs C45(16) " +
                        fmt("%.4f", one.small_band_ap) + " (gap " + fmt("%+.4f", gap) + ", need >= 0.05); easy " +
                        fmt("%.4f", two.aps.easy) + " vs " + fmt("%.4f", one.aps.easy) + " (diff " +
                        fmt("%.4f", easy) + ", need <= 0.05)"};
  }

  void criterion8(const RunOutcome& two, const RunOutcome& three) {
    const double gain = three.aps.hard - two.aps.hard;
    verdicts_[8] = {gain <= 0.02, false,
                    "hard AP three-branch " + fmt("%.4f", three.aps.hard) + " vs two-branch " +
                        fmt("%.4f", two.aps.hard) + " (gain " + fmt("%+.4f", gain) + ", limit +0.02)"};
  }

  void criterion9() {
    Rng rng(9);
    Tensor image({1, 3, 128, 128});
    for (float& v : image.data()) v = static_cast<float>(rng.uniform());
    std::vector<ModelConfig> configs;
    configs.push_back(single_branch_c45());
    configs.push_back(ModelConfig::default_two_branch());
    configs.push_back(three_branch());
    std::vector<std::size_t> convs;
    std::vector<std::size_t> passes;
    for (const ModelConfig& c : configs) {
      ModelParams<float> p = build_model<float>(c, 1);
      Tape<float> tape(false);
      Tensor padded = image;
      forward(tape, padded, c, p);
      convs.push_back(tape.counter("backbone.conv"));
      passes.push_back(tape.counter("backbone.pass"));
    }
    const ModelConfig model = ModelConfig::default_two_branch();
    const Detector detector(model, build_model<float>(model, 1), 256);
    DetectStats single;
    detector.detect(image, "x", {}, &single);
    const double five[] = {1.0, 1.0, 1.0, 1.0, 1.0};
    DetectStats pyramid;
    detector.detect_pyramid(image, five, "x", {}, &pyramid);
    const bool same_k = convs[0] == convs[1] && convs[1] == convs[2] &&
                        std::all_of(passes.begin(), passes.end(), [](std::size_t v) { return v == 1; });
    const bool five_x = pyramid.backbone_passes == 5 * single.backbone_passes &&
                        pyramid.backbone_convs == 5 * single.backbone_convs &&
                        pyramid.backbone_macs == 5 * single.backbone_macs;
    verdicts_[9] = {same_k && five_x, true,
                    "backbone convs for K=1/2/3: " + std::to_string(convs[0]) + "/" + std::to_string(convs[1]) +
                        "/" + std::to_string(convs[2]) + "; 5-scale pyramid " +
                        std::to_string(pyramid.backbone_passes) + " passes, " +
                        std::to_string(pyramid.backbone_macs / single.backbone_macs) + "x single-scale MACs"};
  }

  void criterion10(const RunOutcome& a, const RunOutcome& b) {
    std::ostringstream la;
    std::ostringstream lb;
    for (const TrainLogRow& r : a.trained.log) write_log_row(la, r);
    for (const TrainLogRow& r : b.trained.log) write_log_row(lb, r);
    const bool losses = a.trained.loss_history == b.trained.loss_history;
    const bool log = la.str() == lb.str();
    const bool ap = std::memcmp(&a.aps, &b.aps, sizeof(SubsetAps)) == 0;
    verdicts_[10] = {losses && log && ap, true,
                     std::string("loss history ") + (losses ? "identical" : "DIFFERS") + " (" +
                         std::to_string(a.trained.loss_history.size()) + " iterations), log " +
                         (log ? "identical" : "DIFFERS") + ", AP " + (ap ? "identical" : "DIFFERS") + " (" +
                         fmt("%.17g", a.aps.all) + ")"};
  }

  // Reference implementations, written for clarity rather than speed.
  static std::vector<Detection> oracle_nms(std::vector<Detection> rest, double thresh) {
    std::vector<Detection> kept;
    while (!rest.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < rest.size(); ++i) {
        const Detection& x = rest[i];
        const Detection& y = rest[best];
        if (x.score > y.score || (x.score == y.score && (x.box.x < y.box.x || (x.box.x == y.box.x && x.box.y < y.box.y)))) {
          best = i;
        }
      }
      const Detection top = rest[best];
      kept.push_back(top);
      std::vector<Detection> next;
      for (std::size_t i = 0; i < rest.size(); ++i) {
        if (i != best && !(iou(top.box, rest[i].box) > thresh)) next.push_back(rest[i]);
      }
      rest = std::move(next);
    }
    return kept;
  }

  static void oracle_match(const AnchorSet& anchors, const std::vector<Box>& gts,
                           std::vector<AnchorLabel>& labels, std::vector<int>& index) {
    const std::size_t n = anchors.size();
    labels.assign(n, AnchorLabel::negative);
    index.assign(n, -1);
    if (gts.empty()) return;
    std::vector<std::vector<double>> m(n, std::vector<double>(gts.size()));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t g = 0; g < gts.size(); ++g) m[i][g] = iou(anchors.boxes[i], gts[g]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::max_element(m[i].begin(), m[i].end());
      if (*it > 0.55) {
        labels[i] = AnchorLabel::positive;
        index[i] = static_cast<int>(it - m[i].begin());
      } else if (*it >= 0.35) {
        labels[i] = AnchorLabel::ignored;
      }
    }
    std::vector<bool> taken(n, false);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (m[i][g] > m[best][g]) best = i;
      }
      if (m[best][g] > 0.0 && !taken[best]) {
        taken[best] = true;
        labels[best] = AnchorLabel::positive;
        index[best] = static_cast<int>(g);
      }
    }
  }

  static std::vector<bool> oracle_claim(const std::vector<Box>& dets, const std::vector<Box>& gts, double thresh) {
    std::vector<bool> claimed(gts.size(), false);
    std::vector<bool> tp;
    for (const Box& d : dets) {
      int best = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (claimed[g]) continue;
        if (best < 0 || iou(d, gts[g]) > iou(d, gts[static_cast<std::size_t>(best)])) best = static_cast<int>(g);
      }
      const bool hit = best >= 0 && iou(d, gts[static_cast<std::size_t>(best)]) >= thresh;
      if (hit) claimed[static_cast<std::size_t>(best)] = true;
      tp.push_back(hit);
    }
    return tp;
  }

  InMemoryDataset train_set_;
  InMemoryDataset val_set_;
  GroundTruthByImage val_gts_;
  std::vector<Verdict> verdicts_;
  bool nesting_ok_ = true;
  std::size_t evaluations_ = 0;
};

}  // namespace
}  // namespace mbfcn

int main() {
  try {
    mbfcn::Acceptance acceptance;
    acceptance.run();
    return acceptance.report();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
