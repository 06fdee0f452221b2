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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mbfcn/cli.hpp"
#include "mbfcn/io.hpp"

namespace mbfcn {
namespace {

namespace fs = std::filesystem;

const std::string kFixtures = MBFCN_FIXTURE_DIR;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

class CliWorkspace : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "mbfcn_cli";
    fs::remove_all(root_);
    fs::create_directories(root_);
    const CliResult s = run({"synth", "--out", (root_ / "data").string(), "--count", "12", "--seed", "5",
                       "--size", "64"});
    ASSERT_EQ(s.code, 0) << s.err;
    write_text(root_ / "tiny.cfg",
               "backbone.widths = 4,6,8,8\n"
               "backbone.convs_per_stage = 1\n"
               "branch.1.sources = C3,C4,C5\n"
               "branch.1.stride = 8\n"
               "branch.1.head_dim = 8\n"
               "branch.2.sources = C4,C5\n"
               "branch.2.stride = 16\n"
               "branch.2.head_dim = 8\n"
               "train.max_iters = 20\n"
               "train.max_side = 64\n"
               "train.log_every = 10\n"
               "train.seed = 3\n");
  }
  static fs::path root_;
};

fs::path CliWorkspace::root_;

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"eval", "--det", "x"}).code, 1);
  const CliResult r = run({"eval", "--bogus", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, InputErrorsExitOneWithLocation) {
  const fs::path dir = fs::temp_directory_path() / "mbfcn_cli_errors";
  fs::create_directories(dir);
  write_text(dir / "bad.cfg", "name = x\ntrain.warp = 9\n");
  write_text(dir / "data_missing.txt", "");
  const CliResult bad = run({"train", "--config", (dir / "bad.cfg").string(), "--data", dir.string(),
                       "--out", (dir / "m.bin").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("bad.cfg:2"), std::string::npos) << bad.err;
  EXPECT_NE(bad.err.find("train.warp"), std::string::npos) << bad.err;
  const CliResult missing = run({"eval", "--det", (dir / "nope.txt").string(), "--gt",
                           kFixtures + "/golden_ann.txt", "--subset", "hard"});
  EXPECT_EQ(missing.code, 1);
  const CliResult subset = run({"eval", "--det", kFixtures + "/golden_det.txt", "--gt",
                          kFixtures + "/golden_ann.txt", "--subset", "tiny"});
  EXPECT_EQ(subset.code, 1);
}

TEST(Cli, EvalGoldenFixture) {
  const CliResult r = run({"eval", "--det", kFixtures + "/golden_det.txt", "--gt",
                     kFixtures + "/golden_ann.txt", "--subset", "hard", "--fp", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "AP=0.833333\nP@1fp=0.500000\n");
  const CliResult w = run({"eval", "--det", kFixtures + "/golden_det.txt", "--gt",
                     kFixtures + "/golden_ann_wider.txt", "--gt-format", "wider", "--subset", "hard"});
  EXPECT_EQ(w.out, "AP=0.833333\n");
  const CliResult t = run({"eval", "--det", kFixtures + "/golden_det_ttf.txt", "--gt",
                     kFixtures + "/golden_ann.txt", "--subset", "medium", "--fp", "1"});
  EXPECT_EQ(t.out, "AP=1.000000\nP@1fp=0.666667\n");
  // Both faces are 40 px tall, so the easy subset has nothing to find.
  const CliResult e = run({"eval", "--det", kFixtures + "/golden_det.txt", "--gt",
                     kFixtures + "/golden_ann.txt", "--subset", "easy"});
  EXPECT_EQ(e.out, "AP=0.000000\n");
}

TEST(Cli, EvalWritesPrCurve) {
  const fs::path pr = fs::temp_directory_path() / "mbfcn_cli_pr.txt";
  const CliResult r = run({"eval", "--det", kFixtures + "/golden_det.txt", "--gt",
                     kFixtures + "/golden_ann.txt", "--subset", "all", "--pr-out", pr.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(read_file(pr));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    EXPECT_NE(line.find('\t'), std::string::npos);
    ++n;
  }
  EXPECT_EQ(n, 3u);
}

TEST_F(CliWorkspace, SynthIsDeterministic) {
  const fs::path again = root_ / "data_again";
  ASSERT_EQ(run({"synth", "--out", again.string(), "--count", "12", "--seed", "5", "--size", "64"}).code, 0);
  EXPECT_EQ(read_file(again / "annotations.txt"), read_file(root_ / "data" / "annotations.txt"));
  EXPECT_EQ(read_file(again / "img_00011.ppm"), read_file(root_ / "data" / "img_00011.ppm"));
}

TEST_F(CliWorkspace, TrainDetectEval) {
  const fs::path model = root_ / "model.bin";
  const CliResult t = run({"train", "--config", (root_ / "tiny.cfg").string(), "--data",
                     (root_ / "data").string(), "--out", model.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(t.out.find("10\t") != std::string::npos) << t.out;
  ASSERT_TRUE(fs::exists(model));

  const CliResult again = run({"train", "--config", (root_ / "tiny.cfg").string(), "--data",
                         (root_ / "data").string(), "--out", (root_ / "model2.bin").string()});
  EXPECT_EQ(again.out.substr(0, again.out.find("wrote")), t.out.substr(0, t.out.find("wrote")));
  EXPECT_EQ(read_file(root_ / "model2.bin"), read_file(model));

  const fs::path plain = root_ / "plain.txt";
  const fs::path unit = root_ / "unit.txt";
  const fs::path pyramid = root_ / "pyramid.txt";
  ASSERT_EQ(run({"detect", "--model", model.string(), "--images", (root_ / "data").string(),
                 "--out", plain.string()}).code, 0);
  ASSERT_EQ(run({"detect", "--model", model.string(), "--images", (root_ / "data").string(),
                 "--out", unit.string(), "--scales", "1.0"}).code, 0);
  const CliResult p = run({"detect", "--model", model.string(), "--images", (root_ / "data").string(),
                     "--out", pyramid.string(), "--scales", "0.5,1,2"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(read_file(plain), read_file(unit));
  const DetectionsByImage dets = load_detections(plain);
  EXPECT_EQ(dets.size(), 12u);
  EXPECT_TRUE(dets.count("img_00000.ppm"));

  const CliResult e = run({"eval", "--det", plain.string(), "--gt",
                     (root_ / "data" / "annotations.txt").string(), "--subset", "all"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out.rfind("AP=", 0), 0u);

  EXPECT_EQ(run({"detect", "--model", model.string(), "--images", (root_ / "data").string(),
                 "--out", unit.string(), "--scales", "1,zero"}).code, 1);
  EXPECT_EQ(run({"detect", "--model", (root_ / "tiny.cfg").string(), "--images",
                 (root_ / "data").string(), "--out", unit.string()}).code, 1);
}

TEST_F(CliWorkspace, AblateEmitsOneRowPerConfig) {
  const std::string common =
      "backbone.widths = 4,6,8,8\n"
      "backbone.convs_per_stage = 1\n"
      "train.max_iters = 10\n"
      "train.max_side = 64\n"
      "train.seed = 1\n";
  write_text(root_ / "c45.cfg", "name = C45(16)\nbranch.1.sources = C4,C5\nbranch.1.stride = 16\n" + common);
  write_text(root_ / "c35.cfg",
             "name = C35(8)-C45(16)\nbranch.1.sources = C3,C5\nbranch.1.stride = 8\n"
             "branch.2.sources = C4,C5\nbranch.2.stride = 16\n" + common);
  const fs::path report = root_ / "report.tsv";
  const CliResult r = run({"ablate", "--data", (root_ / "data").string(), "--configs",
                     (root_ / "c45.cfg").string() + "," + (root_ / "c35.cfg").string(), "--out",
                     report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(read_file(report));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "config\tAP-easy\tAP-medium\tAP-hard");
  EXPECT_EQ(lines[1].rfind("C45(16)\t", 0), 0u);
  EXPECT_EQ(lines[2].rfind("C35(8)-C45(16)\t", 0), 0u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), '\t'), 3);
  }
}

}  // namespace
}  // namespace mbfcn
