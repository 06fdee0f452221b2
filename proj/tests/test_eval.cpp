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
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "mbfcn/error.hpp"
#include "mbfcn/eval.hpp"
#include "mbfcn/rng.hpp"

namespace mbfcn {
namespace {

std::vector<Outcome> seq(std::initializer_list<bool> tps) {
  std::vector<Outcome> out;
  double score = 1.0;
  for (bool tp : tps) {
    out.push_back({score, tp});
    score -= 0.1;
  }
  return out;
}

Detection det(Box b, double score) {
  Detection d;
  d.box = b;
  d.score = score;
  return d;
}

// Every detection ranks all GTs by IoU (ties to the lower index) and takes
// the first unclaimed one at or above the threshold.
std::vector<bool> brute_force_claim(const std::vector<Box>& dets, const std::vector<Box>& gts,
                                    double thresh) {
  std::vector<bool> claimed(gts.size(), false);
  std::vector<bool> tp;
  for (const Box& d : dets) {
    std::vector<std::size_t> order(gts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return iou(d, gts[a]) > iou(d, gts[b]); });
    bool hit = false;
    for (std::size_t g : order) {
      if (claimed[g]) continue;
      if (iou(d, gts[g]) >= thresh) {
        claimed[g] = true;
        hit = true;
      }
      break;
    }
    tp.push_back(hit);
  }
  return tp;
}

TEST(AveragePrecision, Examples) {
  EXPECT_NEAR(average_precision(seq({true, false, true}), 2), 0.833333, 1e-6);
  EXPECT_NEAR(average_precision(seq({true, false, true}), 2), 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
  EXPECT_EQ(average_precision(seq({true, true, true}), 3), 1.0);
  EXPECT_EQ(average_precision(seq({false, false}), 3), 0.0);
  EXPECT_EQ(average_precision({}, 0), 1.0);
  EXPECT_EQ(average_precision(seq({false}), 0), 0.0);
  EXPECT_EQ(average_precision({}, 4), 0.0);
}

TEST(AveragePrecision, TiesArePessimistic) {
  const std::vector<Outcome> tied{{0.5, true}, {0.5, false}};
  EXPECT_NEAR(average_precision(tied, 1), 0.5, 1e-15);
  std::vector<Outcome> sorted = tied;
  sort_outcomes(sorted);
  EXPECT_FALSE(sorted[0].tp);
}

TEST(AveragePrecision, PermutationInvariantAndFpDeletionMonotone) {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    std::vector<Outcome> o;
    for (std::size_t i = 0, n = 1 + rng.index(30); i < n; ++i) {
      o.push_back({std::floor(rng.uniform(0, 8)) / 8.0, rng.index(2) == 0});
    }
    const std::size_t tps = std::count_if(o.begin(), o.end(), [](const Outcome& x) { return x.tp; });
    const std::size_t n_gt = tps + rng.index(4);
    const double ap = average_precision(o, n_gt);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    std::vector<Outcome> shuffled = o;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    EXPECT_EQ(average_precision(shuffled, n_gt), ap);
    const EvalCurve c = build_curve(o, n_gt);
    for (std::size_t i = 1; i < c.recall.size(); ++i) EXPECT_GE(c.recall[i], c.recall[i - 1]);
    for (std::size_t i = 0; i < o.size(); ++i) {
      if (o[i].tp) continue;
      std::vector<Outcome> fewer = o;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
      EXPECT_GE(average_precision(fewer, n_gt), ap - 1e-15);
    }
  }
}

TEST(PrecisionAtFp, Examples) {
  const FpOperatingPoint a = precision_at_fp(seq({true, true, false}), 2, 1);
  EXPECT_NEAR(a.precision, 0.666667, 1e-6);
  EXPECT_EQ(a.recall, 1.0);
  const FpOperatingPoint b = precision_at_fp(seq({true, true}), 4, 5);
  EXPECT_EQ(b.precision, 1.0);
  EXPECT_EQ(b.recall, 0.5);
  EXPECT_EQ(precision_at_fp(seq({false, true}), 1, 1).precision, 0.0);
  const FpOperatingPoint c = precision_at_fp(seq({true, false, true, false, true}), 3, 2);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 2u);
  EXPECT_THROW(precision_at_fp(seq({true}), 1, 0), ConfigError);
}

TEST(MatchDetGt, Examples) {
  const std::vector<Box> gts{{0, 0, 10, 10}};
  const std::vector<Box> one{{0, 0, 10, 10}};
  EXPECT_EQ(match_det_gt(one, gts), std::vector<bool>{true});
  const std::vector<Box> two{{0, 0, 10, 10}, {1, 0, 10, 10}};
  EXPECT_EQ(match_det_gt(two, gts), (std::vector<bool>{true, false}));
  EXPECT_EQ(match_det_gt(two, {}), (std::vector<bool>{false, false}));
  // IoU exactly 0.5 counts.
  const std::vector<Box> half{{0, 0, 10, 5}};
  EXPECT_EQ(match_det_gt(half, gts), std::vector<bool>{true});
}

TEST(MatchDetGt, AgreesWithBruteForceOracle) {
  Rng rng(99);
  for (int t = 0; t < 300; ++t) {
    std::vector<Box> gts;
    std::vector<Box> dets;
    for (std::size_t i = 0, n = rng.index(8); i < n; ++i) {
      gts.push_back({std::floor(rng.uniform(0, 30)), std::floor(rng.uniform(0, 30)),
                     4 + std::floor(rng.uniform(0, 12)), 4 + std::floor(rng.uniform(0, 12))});
    }
    for (std::size_t i = 0, n = rng.index(12); i < n; ++i) {
      if (!gts.empty() && rng.index(2) == 0) {
        const Box& g = gts[rng.index(gts.size())];
        dets.push_back({g.x + std::floor(rng.uniform(-3, 3)), g.y + std::floor(rng.uniform(-3, 3)),
                        g.w, g.h});
      } else {
        dets.push_back({std::floor(rng.uniform(0, 30)), std::floor(rng.uniform(0, 30)),
                        4 + std::floor(rng.uniform(0, 12)), 4 + std::floor(rng.uniform(0, 12))});
      }
    }
    const double thresh = rng.index(2) ? 0.5 : 0.3;
    const std::vector<bool> got = match_det_gt(dets, gts, thresh);
    ASSERT_EQ(got, brute_force_claim(dets, gts, thresh)) << "instance " << t;
    const auto n_tp = static_cast<std::size_t>(std::count(got.begin(), got.end(), true));
    EXPECT_LE(n_tp, std::min(dets.size(), gts.size()));
  }
}

TEST(Subsets, HeightThresholds) {
  auto in = [](Subset s, double h) { return subset_band(s).contains(h); };
  EXPECT_FALSE(in(Subset::easy, 40));
  EXPECT_TRUE(in(Subset::medium, 40));
  EXPECT_TRUE(in(Subset::hard, 40));
  for (Subset s : {Subset::easy, Subset::medium, Subset::hard}) {
    EXPECT_TRUE(in(s, 55));
    EXPECT_FALSE(in(s, 8));
  }
  EXPECT_FALSE(in(Subset::easy, 50));
  EXPECT_TRUE(in(Subset::easy, 50.5));
  EXPECT_FALSE(in(Subset::hard, 10));
  EXPECT_TRUE(in(Subset::all, 1));
}

TEST(Subsets, Names) {
  for (Subset s : {Subset::easy, Subset::medium, Subset::hard, Subset::all}) {
    EXPECT_EQ(parse_subset(subset_name(s)), s);
  }
  EXPECT_THROW(parse_subset("tiny"), ConfigError);
}

TEST(Subsets, FilterSplitsKeptAndIgnored) {
  const std::vector<Box> gts{{0, 0, 5, 8}, {0, 0, 5, 40}, {0, 0, 5, 55}};
  const SubsetGts easy = subset_filter(gts, subset_band(Subset::easy));
  ASSERT_EQ(easy.kept.size(), 1u);
  EXPECT_EQ(easy.kept[0].h, 55);
  EXPECT_EQ(easy.ignored.size(), 2u);
  EXPECT_EQ(subset_filter(gts, subset_band(Subset::hard)).kept.size(), 2u);
}

TEST(Evaluate, IgnoredFacesDoNotCountAsFalsePositives) {
  GroundTruthByImage gts{{"a", {{0, 0, 40, 40}, {100, 0, 60, 60}}}};
  DetectionsByImage dets{{"a", {det({0, 0, 40, 40}, 0.9), det({100, 0, 60, 60}, 0.8),
                                det({300, 300, 10, 10}, 0.7)}}};
  const EvalCurve easy = evaluate(dets, gts, subset_band(Subset::easy));
  EXPECT_EQ(easy.n_gt, 1u);
  ASSERT_EQ(easy.outcomes.size(), 2u);
  EXPECT_TRUE(easy.outcomes[0].tp);
  EXPECT_FALSE(easy.outcomes[1].tp);
  EXPECT_EQ(easy.outcomes[1].score, 0.7);
  const EvalCurve hard = evaluate(dets, gts, subset_band(Subset::hard));
  EXPECT_EQ(hard.n_gt, 2u);
  EXPECT_EQ(hard.outcomes.size(), 3u);
  EXPECT_EQ(hard.ap, 1.0);
}

TEST(Evaluate, FixtureAp) {
  GroundTruthByImage gts{{"img", {{10, 10, 30, 40}, {60, 10, 30, 40}}}};
  DetectionsByImage dets{{"img", {det({10, 10, 30, 40}, 0.9), det({150, 150, 20, 20}, 0.8),
                                  det({60, 10, 30, 40}, 0.7)}}};
  EXPECT_NEAR(evaluate(dets, gts, subset_band(Subset::hard)).ap, 0.833333, 1e-6);
  EXPECT_NEAR(subset_aps(dets, gts).hard, 0.833333, 1e-6);
}

TEST(Evaluate, DetectionsForUnannotatedImagesAreFalsePositives) {
  GroundTruthByImage gts{{"a", {{0, 0, 40, 40}}}};
  DetectionsByImage dets{{"a", {det({0, 0, 40, 40}, 0.5)}}, {"b", {det({0, 0, 40, 40}, 0.9)}}};
  const EvalCurve c = evaluate(dets, gts, subset_band(Subset::all));
  EXPECT_EQ(c.outcomes.size(), 2u);
  EXPECT_NEAR(c.ap, 0.5, 1e-15);
}

TEST(Evaluate, SubsetsNestOnRandomRuns) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    GroundTruthByImage gts;
    DetectionsByImage dets;
    for (int i = 0; i < 5; ++i) {
      const std::string id = "i" + std::to_string(i);
      std::vector<Box>& g = gts[id];
      for (std::size_t k = 0, n = rng.index(6); k < n; ++k) {
        const double s = std::exp(rng.uniform(std::log(6.0), std::log(90.0)));
        g.push_back({rng.uniform(0, 200), rng.uniform(0, 200), s, s});
      }
      for (const Box& b : g) {
        if (rng.index(3)) dets[id].push_back(det({b.x + rng.uniform(-2, 2), b.y, b.w, b.h}, rng.uniform()));
      }
      for (int k = 0; k < 3; ++k) dets[id].push_back(det({rng.uniform(0, 200), rng.uniform(0, 200), 20, 20}, rng.uniform()));
    }
    const EvalCurve e = evaluate(dets, gts, subset_band(Subset::easy));
    const EvalCurve m = evaluate(dets, gts, subset_band(Subset::medium));
    const EvalCurve h = evaluate(dets, gts, subset_band(Subset::hard));
    EXPECT_GE(h.n_gt, m.n_gt);
    EXPECT_GE(m.n_gt, e.n_gt);
    for (const auto& [id, g] : gts) {
      const auto he = subset_filter(g, subset_band(Subset::hard)).kept;
      for (const Box& b : subset_filter(g, subset_band(Subset::medium)).kept) {
        EXPECT_NE(std::find(he.begin(), he.end(), b), he.end());
      }
    }
  }
}

TEST(PrCurve, TwoColumns) {
  const EvalCurve c = build_curve(seq({true, false, true}), 2);
  std::ostringstream os;
  write_pr_curve(os, c);
  std::istringstream is(os.str());
  double r = 0;
  double p = 0;
  std::size_t n = 0;
  while (is >> r >> p) ++n;
  EXPECT_EQ(n, 3u);
  EXPECT_EQ(r, 1.0);
  EXPECT_NEAR(p, 2.0 / 3.0, 1e-6);
}

}  // namespace
}  // namespace mbfcn
