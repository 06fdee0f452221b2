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
#include "mbfcn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mbfcn/config.hpp"
#include "mbfcn/error.hpp"
#include "mbfcn/eval.hpp"
#include "mbfcn/gradcheck.hpp"
#include "mbfcn/inference.hpp"
#include "mbfcn/io.hpp"
#include "mbfcn/log.hpp"
#include "mbfcn/synth.hpp"
#include "mbfcn/training.hpp"

namespace mbfcn {
namespace {

namespace fs = std::filesystem;

constexpr const char* kAnnotationFile = "annotations.txt";

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !(v > 0.0)) {
      throw ConfigError("--scales: '" + item + "' is not a positive number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--scales: no scales given");
  return out;
}

DiskDataset open_data_dir(const fs::path& dir) {
  const fs::path ann = dir / kAnnotationFile;
  if (!fs::exists(ann)) throw IoError("no " + std::string(kAnnotationFile) + " in " + dir.string());
  return DiskDataset::from_annotations(ann);
}

// Every .ppm/.pgm file directly inside dir, by file name.
DiskDataset image_dir_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<DiskDataset::Entry> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) {
      entries.push_back({e.path().filename().string(), e.path(), {}});
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
  return DiskDataset(std::move(entries));
}

TrainResult train_run(const RunConfig& run, const Dataset& data, std::ostream& out,
                      const std::optional<fs::path>& ckpt) {
  const std::string config_text = serialize_config(run);
  TrainHooks hooks;
  hooks.on_log = [&](const TrainLogRow& row) {
    write_log_row(out, row);
    out.flush();
  };
  if (ckpt) {
    hooks.on_checkpoint = [&](std::size_t, const ModelParams<float>& params) {
      save_checkpoint(*ckpt, params, config_text);
    };
  }
  return train(data, run.model, run.train, hooks);
}

struct Flags {
  // synth
  std::string out_dir;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::size_t size = 128;
  // train
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed_override;
  // detect
  std::string model;
  std::string images;
  std::string scales = "1.0";
  double score_thresh = DetectOptions{}.score_thresh;
  double nms_thresh = DetectOptions{}.nms_thresh;
  // eval
  std::string det;
  std::string gt;
  std::string gt_format = "internal";
  std::string subset;
  std::optional<std::size_t> fp;
  std::string pr_out;
  // ablate
  std::string configs;
  std::string val;
};

int cmd_synth(const Flags& f, std::ostream& out) {
  SyntheticSpec spec;
  spec.image_size = f.size;
  spec.seed = f.seed;
  spec.count = f.count;
  spec.face_max = std::min(spec.face_max, static_cast<double>(f.size));
  spec.face_min = std::min(spec.face_min, spec.face_max);
  synth_generate(spec, f.out_dir);
  out << "wrote " << spec.count << " images to " << f.out_dir << '\n';
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  RunConfig run = load_config(f.config);
  if (f.seed_override) run.train.seed = *f.seed_override;
  const DiskDataset data = open_data_dir(f.data);
  train_run(run, data, out, fs::path(f.out));
  return kExitOk;
}

int cmd_detect(const Flags& f, std::ostream& out) {
  const std::vector<double> scales = parse_scales(f.scales);
  Checkpoint ck = load_checkpoint(f.model);
  const RunConfig run = parse_config(ck.config_text, f.model + " (embedded config)");
  const Detector detector(run.model, std::move(ck.params), run.train.max_side);
  const DiskDataset images = image_dir_dataset(f.images);
  const DetectOptions options{f.score_thresh, f.nms_thresh};
  const DetectionsByImage dets = detect_dataset(detector, images, scales, options);
  save_detections(f.out, dets);
  std::size_t n = 0;
  for (const auto& [id, list] : dets) n += list.size();
  out << "wrote " << n << " detections for " << dets.size() << " images to " << f.out << '\n';
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  const DetectionsByImage dets = load_detections(f.det);
  const GroundTruthByImage gts =
      ground_truth_by_image(load_annotations(f.gt, parse_annotation_format(f.gt_format)));
  const HeightBand band = subset_band(parse_subset(f.subset));
  const EvalCurve curve = evaluate(dets, gts, band);
  out << "AP=" << fixed6(curve.ap) << '\n';
  if (f.fp) {
    const FpOperatingPoint pt = precision_at_fp(curve.outcomes, curve.n_gt, *f.fp);
    out << "P@" << *f.fp << "fp=" << fixed6(pt.precision) << '\n';
  }
  if (!f.pr_out.empty()) {
    std::ofstream pr(f.pr_out);
    if (!pr) throw IoError("cannot open " + f.pr_out + " for writing");
    write_pr_curve(pr, curve);
    if (!pr.flush()) throw IoError("failed writing " + f.pr_out);
  }
  return kExitOk;
}

int cmd_ablate(const Flags& f, std::ostream& out) {
  std::vector<RunConfig> runs;
  {
    std::stringstream ss(f.configs);
    std::string path;
    while (std::getline(ss, path, ',')) {
      if (path.empty()) throw ConfigError("--configs: empty entry");
      runs.push_back(load_config(path));
    }
  }
  if (runs.empty()) throw ConfigError("--configs: no configuration files given");
  const std::uint64_t seed = f.seed_override.value_or(runs.front().train.seed);

  const DiskDataset data = open_data_dir(f.data);
  std::optional<DiskDataset> val_disk;
  std::size_t n_train = data.size();
  if (!f.val.empty()) {
    val_disk = open_data_dir(f.val);
  } else {
    n_train = data.size() - data.size() / 6;
  }
  const DatasetSlice train_set(data, 0, n_train);
  const DatasetSlice held_out(data, n_train, data.size() - n_train);
  const Dataset& val = val_disk ? static_cast<const Dataset&>(*val_disk) : held_out;
  if (val.size() == 0) throw ConfigError("ablate: validation set is empty");
  const GroundTruthByImage gts = dataset_ground_truth(val);

  std::ofstream report(f.out);
  if (!report) throw IoError("cannot open " + f.out + " for writing");
  report << "config\tAP-easy\tAP-medium\tAP-hard\n";
  const std::vector<double> scales = {1.0};
  std::ostringstream sink;
  for (RunConfig& run : runs) {
    run.train.seed = seed;
    TrainResult trained = train_run(run, train_set, sink, std::nullopt);
    const Detector detector(run.model, std::move(trained.params), run.train.max_side);
    const SubsetAps aps = subset_aps(detect_dataset(detector, val, scales, {}), gts);
    const std::string row = run.display_name() + "\t" + fixed6(aps.easy) + "\t" + fixed6(aps.medium) +
                            "\t" + fixed6(aps.hard);
    report << row << '\n';
    out << row << '\n';
  }
  if (!report.flush()) throw IoError("failed writing " + f.out);
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, std::ostream& out) {
  GradcheckOptions opts;
  opts.seed = f.seed;
  const GradcheckReport report = run_gradcheck(opts);
  char buf[256];
  for (const GradcheckCase& c : report.cases) {
    std::snprintf(buf, sizeof buf, "%-28s instances=%zu compared=%zu skipped=%zu max_rel_error=%.3e\n",
                  c.name.c_str(), c.instances, c.coordinates, c.skipped, c.max_rel_error);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "max_rel_error=%.3e time=%.1fs %s\n", report.max_rel_error(),
                report.seconds, report.passed() ? "PASS" : "FAIL");
  out << buf;
  return report.passed() ? kExitOk : kExitInternal;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-branch fully convolutional face detector", "mbfcn"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic face-glyph dataset");
  synth->add_option("--out", f.out_dir, "Output directory")->required();
  synth->add_option("--count", f.count, "Number of images")->required();
  synth->add_option("--seed", f.seed, "Dataset seed")->required();
  synth->add_option("--size", f.size, "Image side in pixels")->capture_default_str();

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", f.config, "Configuration file")->required();
  train_cmd->add_option("--data", f.data, "Dataset directory with annotations.txt")->required();
  train_cmd->add_option("--out", f.out, "Checkpoint path")->required();
  train_cmd->add_option("--seed", f.seed_override, "Override train.seed");

  CLI::App* detect = app.add_subcommand("detect", "Run a trained model over a directory of images");
  detect->add_option("--model", f.model, "Checkpoint")->required();
  detect->add_option("--images", f.images, "Directory of .ppm/.pgm images")->required();
  detect->add_option("--out", f.out, "Detection file")->required();
  detect->add_option("--scales", f.scales, "Comma-separated pyramid scales")->capture_default_str();
  detect->add_option("--score-thresh", f.score_thresh, "Minimum face probability")->capture_default_str();
  detect->add_option("--nms-thresh", f.nms_thresh, "NMS IoU threshold")->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--det", f.det, "Detection file")->required();
  eval->add_option("--gt", f.gt, "Annotation file")->required();
  eval->add_option("--gt-format", f.gt_format, "internal or wider")->capture_default_str();
  eval->add_option("--subset", f.subset, "easy, medium, hard or all")->required();
  eval->add_option("--fp", f.fp, "Also report precision at N false positives")->check(CLI::PositiveNumber);
  eval->add_option("--pr-out", f.pr_out, "Write the PR curve (recall, precision)");

  CLI::App* ablate = app.add_subcommand("ablate", "Train and evaluate several configurations");
  ablate->add_option("--data", f.data, "Dataset directory")->required();
  ablate->add_option("--configs", f.configs, "Comma-separated configuration files")->required();
  ablate->add_option("--out", f.out, "Report file")->required();
  ablate->add_option("--val", f.val, "Validation dataset directory (default: last sixth of --data)");
  ablate->add_option("--seed", f.seed_override, "Shared seed (default: first config's train.seed)");

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  gradcheck->add_option("--seed", f.seed, "Instance seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(f, out);
    if (*train_cmd) return cmd_train(f, out);
    if (*detect) return cmd_detect(f, out);
    if (*eval) return cmd_eval(f, out);
    if (*ablate) return cmd_ablate(f, out);
    if (*gradcheck) return cmd_gradcheck(f, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mbfcn
