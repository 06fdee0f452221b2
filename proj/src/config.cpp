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
#include "mbfcn/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "mbfcn/error.hpp"
#include "mbfcn/io.hpp"

namespace mbfcn {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const std::size_t comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <typename Seq, typename F>
std::string join(const Seq& seq, F f) {
  std::string out;
  for (const auto& v : seq) {
    if (!out.empty()) out += ',';
    out += f(v);
  }
  return out;
}

class ValueParser {
 public:
  ValueParser(const std::string& source, std::size_t line, std::string key)
      : source_(source), line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source_, line_, "key '" + key_ + "': " + what);
  }

  double real(std::string_view v) const {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
      fail("'" + std::string(v) + "' is not a number");
    }
    return out;
  }

  std::size_t count(std::string_view v) const {
    std::size_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
      fail("'" + std::string(v) + "' is not a non-negative integer");
    }
    return out;
  }

  std::vector<double> reals(std::string_view v) const {
    std::vector<double> out;
    for (std::string_view item : split_list(v)) out.push_back(real(item));
    return out;
  }

  std::vector<Stage> stages(std::string_view v) const {
    std::vector<Stage> out;
    for (std::string_view item : split_list(v)) {
      if (item == "C2") {
        out.push_back(Stage::C2);
      } else if (item == "C3") {
        out.push_back(Stage::C3);
      } else if (item == "C4") {
        out.push_back(Stage::C4);
      } else if (item == "C5") {
        out.push_back(Stage::C5);
      } else {
        fail("unknown stage '" + std::string(item) + "' (expected C2, C3, C4 or C5)");
      }
    }
    return out;
  }

 private:
  const std::string& source_;
  std::size_t line_;
  std::string key_;
};

struct BranchDraft {
  BranchConfig config;
  bool has_sources = false;
  bool has_stride = false;
  bool has_sizes = false;
  std::size_t line = 0;
};

void set_train(TrainConfig& t, std::string_view field, std::string_view value, const ValueParser& p) {
  if (field == "base_lr") {
    t.base_lr = p.real(value);
  } else if (field == "lr_decay_every") {
    t.lr_decay_every = p.count(value);
  } else if (field == "lr_decay_factor") {
    t.lr_decay_factor = p.real(value);
  } else if (field == "max_iters") {
    t.max_iters = p.count(value);
  } else if (field == "momentum") {
    t.momentum = p.real(value);
  } else if (field == "weight_decay") {
    t.weight_decay = p.real(value);
  } else if (field == "batch_per_branch") {
    t.batch_per_branch = p.count(value);
  } else if (field == "pos_iou") {
    t.pos_iou = p.real(value);
  } else if (field == "neg_iou") {
    t.neg_iou = p.real(value);
  } else if (field == "flip_prob") {
    t.flip_prob = p.real(value);
  } else if (field == "max_side") {
    t.max_side = p.count(value);
  } else if (field == "lambda") {
    t.lambda = p.reals(value);
  } else if (field == "gamma") {
    t.gamma = p.reals(value);
  } else if (field == "seed") {
    t.seed = p.count(value);
  } else if (field == "log_every") {
    t.log_every = p.count(value);
  } else if (field == "checkpoint_every") {
    t.checkpoint_every = p.count(value);
  } else {
    p.fail("unknown key");
  }
}

}  // namespace

std::vector<double> default_anchor_sizes(std::size_t stride) {
  switch (stride) {
    case 4:
      return {8, 12, 16, 24};
    case 8:
      return {12, 16, 24, 32, 48};
    case 16:
      return {64, 96, 128, 192};
    default:
      return {4.0 * static_cast<double>(stride), 6.0 * static_cast<double>(stride)};
  }
}

RunConfig parse_config(std::string_view text, const std::string& source) {
  RunConfig cfg;
  std::map<std::size_t, BranchDraft> branches;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const ValueParser p(source, line_no, key);
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    if (value.empty()) p.fail("empty value");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      p.fail("duplicate key (first set on line " + std::to_string(it->second) + ")");
    }

    if (key == "name") {
      cfg.name = std::string(value);
    } else if (key.starts_with("backbone.")) {
      const std::string_view field = std::string_view(key).substr(9);
      BackboneConfig& b = cfg.model.backbone;
      if (field == "widths") {
        const auto v = p.reals(value);
        if (v.size() != 4) p.fail("expected 4 stage widths");
        for (std::size_t i = 0; i < 4; ++i) b.widths[i] = p.count(split_list(value)[i]);
      } else if (field == "convs_per_stage") {
        b.convs_per_stage = p.count(value);
      } else if (field == "kernel") {
        b.kernel = p.count(value);
      } else if (field == "init") {
        if (value == "he") {
          b.init = InitScheme::he;
        } else if (value == "gaussian") {
          b.init = InitScheme::gaussian;
        } else {
          p.fail("expected 'he' or 'gaussian'");
        }
      } else {
        p.fail("unknown key");
      }
    } else if (key.starts_with("branch.")) {
      const std::string_view rest = std::string_view(key).substr(7);
      const std::size_t dot = rest.find('.');
      if (dot == std::string_view::npos) p.fail("expected branch.<index>.<field>");
      const std::size_t index = p.count(rest.substr(0, dot));
      if (index == 0) p.fail("branch indices start at 1");
      const std::string_view field = rest.substr(dot + 1);
      BranchDraft& d = branches[index];
      if (d.line == 0) d.line = line_no;
      if (field == "sources") {
        d.config.sources = p.stages(value);
        d.has_sources = true;
      } else if (field == "stride") {
        d.config.target_stride = p.count(value);
        d.has_stride = true;
      } else if (field == "head_dim") {
        d.config.head_dim = p.count(value);
      } else if (field == "anchor_sizes") {
        d.config.anchor_sizes = p.reals(value);
        d.has_sizes = true;
      } else if (field == "anchor_ratios") {
        d.config.anchor_ratios = p.reals(value);
      } else {
        p.fail("unknown key");
      }
    } else if (key.starts_with("train.")) {
      set_train(cfg.train, std::string_view(key).substr(6), value, p);
    } else {
      p.fail("unknown key");
    }
  }

  if (!branches.empty()) {
    cfg.model.branches.clear();
    std::size_t expect = 1;
    for (auto& [index, d] : branches) {
      if (index != expect) {
        throw ParseError(source, d.line,
                         "branch." + std::to_string(index) + " given but branch." +
                             std::to_string(expect) + " is missing");
      }
      if (!d.has_sources) throw ParseError(source, d.line, "branch." + std::to_string(index) + ".sources is required");
      if (!d.has_stride) throw ParseError(source, d.line, "branch." + std::to_string(index) + ".stride is required");
      if (!d.has_sizes) d.config.anchor_sizes = default_anchor_sizes(d.config.target_stride);
      cfg.model.branches.push_back(d.config);
      ++expect;
    }
  }
  try {
    cfg.model.validate();
    cfg.train.validate(cfg.model.branches.size());
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

std::string serialize_config(const RunConfig& config) {
  std::ostringstream os;
  const auto count = [](std::size_t v) { return std::to_string(v); };
  if (!config.name.empty()) os << "name = " << config.name << '\n';
  const BackboneConfig& b = config.model.backbone;
  os << "backbone.widths = " << join(b.widths, count) << '\n';
  os << "backbone.convs_per_stage = " << b.convs_per_stage << '\n';
  os << "backbone.kernel = " << b.kernel << '\n';
  os << "backbone.init = " << (b.init == InitScheme::he ? "he" : "gaussian") << '\n';
  for (std::size_t k = 0; k < config.model.branches.size(); ++k) {
    const BranchConfig& br = config.model.branches[k];
    const std::string p = "branch." + std::to_string(k + 1) + ".";
    os << p << "sources = " << join(br.sources, stage_name) << '\n';
    os << p << "stride = " << br.target_stride << '\n';
    os << p << "head_dim = " << br.head_dim << '\n';
    os << p << "anchor_sizes = " << join(br.anchor_sizes, fmt) << '\n';
    os << p << "anchor_ratios = " << join(br.anchor_ratios, fmt) << '\n';
  }
  const TrainConfig& t = config.train;
  os << "train.base_lr = " << fmt(t.base_lr) << '\n';
  os << "train.lr_decay_every = " << t.lr_decay_every << '\n';
  os << "train.lr_decay_factor = " << fmt(t.lr_decay_factor) << '\n';
  os << "train.max_iters = " << t.max_iters << '\n';
  os << "train.momentum = " << fmt(t.momentum) << '\n';
  os << "train.weight_decay = " << fmt(t.weight_decay) << '\n';
  os << "train.batch_per_branch = " << t.batch_per_branch << '\n';
  os << "train.pos_iou = " << fmt(t.pos_iou) << '\n';
  os << "train.neg_iou = " << fmt(t.neg_iou) << '\n';
  os << "train.flip_prob = " << fmt(t.flip_prob) << '\n';
  os << "train.max_side = " << t.max_side << '\n';
  os << "train.lambda = " << join(t.lambda, fmt) << '\n';
  os << "train.gamma = " << join(t.gamma, fmt) << '\n';
  os << "train.seed = " << t.seed << '\n';
  os << "train.log_every = " << t.log_every << '\n';
  os << "train.checkpoint_every = " << t.checkpoint_every << '\n';
  return os.str();
}

}  // namespace mbfcn
