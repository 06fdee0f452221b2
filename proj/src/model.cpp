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
#include "mbfcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mbfcn/error.hpp"
#include "mbfcn/rng.hpp"

namespace mbfcn {
namespace {

constexpr double kHeadStd = 0.01;
constexpr double kBiasInit = 0.1;

bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct ConvLayer {
  std::string name;
  std::size_t c_in;
  std::size_t c_out;
  std::size_t k;
  ConvGeom geom;
  bool backbone;
};

std::vector<ConvLayer> backbone_layers(const BackboneConfig& b) {
  const std::size_t k = b.kernel;
  const std::size_t pad = k / 2;
  std::vector<ConvLayer> layers;
  layers.push_back({"stem", 3, b.widths[0], k, {2, pad, 1}, true});
  std::size_t c_in = b.widths[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string stage = "c" + std::to_string(s + 2);
    for (std::size_t i = 0; i < b.convs_per_stage; ++i) {
      ConvGeom g{1, pad, 1};
      if (s == 3) {
        g = {1, 2 * pad, 2};
      } else if (i == 0) {
        g.stride = 2;
      }
      layers.push_back({stage + "." + std::to_string(i), c_in, b.widths[s], k, g, true});
      c_in = b.widths[s];
    }
  }
  return layers;
}

std::string branch_prefix(std::size_t index) { return "branch" + std::to_string(index + 1); }

std::size_t fused_channels(const BackboneConfig& b, const BranchConfig& br) {
  std::size_t c = 0;
  for (Stage s : br.sources) c += b.widths[static_cast<std::size_t>(s)];
  return c;
}

std::vector<ConvLayer> head_layers(const ModelConfig& config) {
  std::vector<ConvLayer> layers;
  for (std::size_t k = 0; k < config.branches.size(); ++k) {
    const BranchConfig& br = config.branches[k];
    const std::string p = branch_prefix(k);
    const std::size_t a = br.anchors_per_cell();
    layers.push_back({p + ".reduce", fused_channels(config.backbone, br), br.head_dim, 1, {}, false});
    layers.push_back({p + ".cls", br.head_dim, 2 * a, 1, {}, false});
    layers.push_back({p + ".reg", br.head_dim, 4 * a, 1, {}, false});
  }
  return layers;
}

std::set<std::size_t> upsample_factors(const ModelConfig& config) {
  std::set<std::size_t> factors;
  for (const BranchConfig& br : config.branches) {
    for (Stage s : br.sources) {
      if (stage_stride(s) > br.target_stride) factors.insert(stage_stride(s) / br.target_stride);
    }
  }
  return factors;
}

std::string filler_name(std::size_t f) { return "filler.x" + std::to_string(f); }

std::vector<Stage> ordered_sources(const BranchConfig& br) {
  std::vector<Stage> s = br.sources;
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

std::string stage_name(Stage s) { return "C" + std::to_string(static_cast<int>(s) + 2); }

std::string BranchConfig::name() const {
  std::string label = "C";
  for (Stage s : ordered_sources(*this)) label += std::to_string(static_cast<int>(s) + 2);
  return label + "(" + std::to_string(target_stride) + ")";
}

ModelConfig ModelConfig::default_two_branch() {
  ModelConfig c;
  c.branches.push_back({{Stage::C3, Stage::C4, Stage::C5}, 8, 64, {12, 16, 24, 32, 48}, {1.0}});
  c.branches.push_back({{Stage::C4, Stage::C5}, 16, 64, {64, 96, 128, 192}, {1.0}});
  return c;
}

std::string ModelConfig::name() const {
  std::string label;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    if (i) label += "-";
    label += branches[i].name();
  }
  return label;
}

std::size_t ModelConfig::input_multiple() const {
  std::size_t m = kInputMultiple;
  for (const BranchConfig& br : branches) m = std::max(m, br.target_stride);
  return m;
}

void ModelConfig::validate() const {
  const BackboneConfig& b = backbone;
  for (std::size_t i = 0; i < 4; ++i) {
    if (b.widths[i] == 0) throw ConfigError("backbone width for stage C" + std::to_string(i + 2) + " must be >= 1");
  }
  if (b.convs_per_stage == 0) throw ConfigError("backbone.convs_per_stage must be >= 1");
  if (b.kernel == 0 || b.kernel % 2 == 0) {
    throw ConfigError("backbone.kernel must be odd, got " + std::to_string(b.kernel));
  }
  if (branches.empty()) throw ConfigError("model needs at least one branch");
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const BranchConfig& br = branches[k];
    const std::string where = "branch " + std::to_string(k + 1) + ": ";
    if (br.sources.empty()) throw ConfigError(where + "sources must not be empty");
    std::set<Stage> uniq(br.sources.begin(), br.sources.end());
    if (uniq.size() != br.sources.size()) throw ConfigError(where + "duplicate source stage");
    if (!is_pow2(br.target_stride)) {
      throw ConfigError(where + "stride " + std::to_string(br.target_stride) + " is not a power of two");
    }
    for (Stage s : br.sources) {
      const std::size_t ss = stage_stride(s);
      const std::size_t hi = std::max(ss, br.target_stride);
      const std::size_t lo = std::min(ss, br.target_stride);
      if (hi % lo != 0 || !is_pow2(hi / lo)) {
        throw ConfigError(where + "cannot resample " + stage_name(s) + " (stride " +
                          std::to_string(ss) + ") to stride " + std::to_string(br.target_stride));
      }
    }
    if (br.head_dim == 0) throw ConfigError(where + "head_dim must be >= 1");
    if (br.anchor_sizes.empty()) throw ConfigError(where + "anchor_sizes must not be empty");
    if (br.anchor_ratios.empty()) throw ConfigError(where + "anchor_ratios must not be empty");
    for (std::size_t i = 0; i < br.anchor_sizes.size(); ++i) {
      if (!(br.anchor_sizes[i] > 0.0)) throw ConfigError(where + "anchor sizes must be positive");
      if (i > 0 && !(br.anchor_sizes[i] > br.anchor_sizes[i - 1])) {
        throw ConfigError(where + "anchor_sizes must be strictly increasing");
      }
    }
    for (double r : br.anchor_ratios) {
      if (!(r > 0.0)) throw ConfigError(where + "anchor ratios must be positive");
    }
  }
}

template <typename T>
BasicTensor<T>& ModelParams<T>::at(const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw ConfigError("model parameter '" + name + "' is missing");
  return it->second.tensor;
}

template <typename T>
const BasicTensor<T>& ModelParams<T>::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) throw ConfigError("model parameter '" + name + "' is missing");
  return it->second.tensor;
}

template <typename T>
std::vector<BasicTensor<T>*> ModelParams<T>::trainable() {
  std::vector<BasicTensor<T>*> out;
  for (auto& [name, e] : entries) {
    if (e.trainable) out.push_back(&e.tensor);
  }
  return out;
}

template <typename T>
void ModelParams<T>::enable_grad() {
  for (auto& [name, e] : entries) {
    if (e.trainable) e.tensor.enable_grad();
  }
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto& [name, e] : entries) e.tensor.zero_grad();
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries) {
    if (e.trainable) n += e.tensor.size();
  }
  return n;
}

template <typename T>
ModelParams<T> build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams<T> params;
  auto add = [&](const ConvLayer& l) {
    double stddev = kHeadStd;
    if (l.backbone && config.backbone.init == InitScheme::he) {
      stddev = std::sqrt(2.0 / static_cast<double>(l.c_in * l.k * l.k));
    }
    BasicTensor<T> w({l.c_out, l.c_in, l.k, l.k});
    for (T& v : w.data()) v = static_cast<T>(rng.normal(0.0, stddev));
    params.entries[l.name + ".w"] = {std::move(w), true};
    params.entries[l.name + ".b"] = {BasicTensor<T>({1, l.c_out, 1, 1}, static_cast<T>(kBiasInit)), true};
  };
  for (const ConvLayer& l : backbone_layers(config.backbone)) add(l);
  for (const ConvLayer& l : head_layers(config)) add(l);
  for (std::size_t f : upsample_factors(config)) {
    params.entries[filler_name(f)] = {bilinear_filler<T>(f), false};
  }
  return params;
}

template <typename T>
void check_params(const ModelConfig& config, const ModelParams<T>& params) {
  config.validate();
  auto expect = [&](const std::string& name, Shape shape, bool trainable) {
    auto it = params.entries.find(name);
    if (it == params.entries.end()) throw ConfigError("model parameter '" + name + "' is missing");
    if (it->second.tensor.shape() != shape) {
      throw ConfigError("model parameter '" + name + "' has shape " +
                        it->second.tensor.shape().str() + ", expected " + shape.str());
    }
    if (it->second.trainable != trainable) {
      throw ConfigError("model parameter '" + name + "' has the wrong trainable flag");
    }
  };
  std::size_t expected = 0;
  auto layers = backbone_layers(config.backbone);
  auto heads = head_layers(config);
  layers.insert(layers.end(), heads.begin(), heads.end());
  for (const ConvLayer& l : layers) {
    expect(l.name + ".w", {l.c_out, l.c_in, l.k, l.k}, true);
    expect(l.name + ".b", {1, l.c_out, 1, 1}, true);
    expected += 2;
  }
  for (std::size_t f : upsample_factors(config)) {
    const std::size_t k = 2 * f - f % 2;
    expect(filler_name(f), {1, 1, k, k}, false);
    ++expected;
  }
  if (expected != params.entries.size()) {
    throw ConfigError("model has " + std::to_string(params.entries.size()) +
                      " parameter tensors, configuration expects " + std::to_string(expected));
  }
}

template <typename T>
FeatureMaps<T> extract_features(Tape<T>& tape, BasicTensor<T>& image, const BackboneConfig& config,
                                ModelParams<T>& params) {
  const Shape& s = image.shape();
  if (s.c != 3 || s.h % kInputMultiple != 0 || s.w % kInputMultiple != 0 || s.h == 0 || s.w == 0) {
    throw ConfigError("extract_features: image shape " + s.str() +
                      " must have 3 channels and sides that are non-zero multiples of 16");
  }
  tape.count("backbone.pass");
  FeatureMaps<T> maps;
  BasicTensor<T>* x = &image;
  for (const ConvLayer& l : backbone_layers(config)) {
    const std::size_t before = tape.counter("conv2d.macs");
    x = &conv2d(tape, *x, params.at(l.name + ".w"), params.at(l.name + ".b"), l.geom);
    tape.count("backbone.conv");
    tape.count("backbone.macs", tape.counter("conv2d.macs") - before);
    x = &relu(tape, *x);
    if (l.name.size() >= 2 && l.name[0] == 'c') {
      const std::size_t stage = static_cast<std::size_t>(l.name[1] - '2');
      maps.maps[stage] = x;
    }
  }
  return maps;
}

template <typename T>
BasicTensor<T>& fuse_branch(Tape<T>& tape, const FeatureMaps<T>& features,
                            const BranchConfig& branch, ModelParams<T>& params) {
  std::vector<BasicTensor<T>*> parts;
  for (Stage s : ordered_sources(branch)) {
    BasicTensor<T>* x = &features[s];
    const std::size_t ss = stage_stride(s);
    if (ss > branch.target_stride) {
      const std::size_t f = ss / branch.target_stride;
      x = &bilinear_upsample(tape, *x, params.at(filler_name(f)), f);
    } else if (ss < branch.target_stride) {
      if (branch.target_stride % ss != 0 || !is_pow2(branch.target_stride / ss)) {
        throw ConfigError("fuse_branch: cannot down-sample stride " + std::to_string(ss) +
                          " to " + std::to_string(branch.target_stride));
      }
      for (std::size_t r = branch.target_stride / ss; r > 1; r /= 2) x = &max_pool2d(tape, *x, 2, 2);
    }
    parts.push_back(x);
  }
  return concat_channels<T>(tape, parts);
}

template <typename T>
HeadOutput<T> branch_head(Tape<T>& tape, BasicTensor<T>& fused, const BranchConfig& branch,
                          std::size_t branch_index, ModelParams<T>& params) {
  (void)branch;
  const std::string p = branch_prefix(branch_index);
  BasicTensor<T>& reduced =
      relu(tape, conv2d(tape, fused, params.at(p + ".reduce.w"), params.at(p + ".reduce.b"), {}));
  HeadOutput<T> out;
  out.cls = &conv2d(tape, reduced, params.at(p + ".cls.w"), params.at(p + ".cls.b"), {});
  out.reg = &conv2d(tape, reduced, params.at(p + ".reg.w"), params.at(p + ".reg.b"), {});
  return out;
}

template <typename T>
std::vector<HeadOutput<T>> forward(Tape<T>& tape, BasicTensor<T>& image, const ModelConfig& config,
                                   ModelParams<T>& params) {
  const FeatureMaps<T> features = extract_features(tape, image, config.backbone, params);
  std::vector<HeadOutput<T>> outputs;
  outputs.reserve(config.branches.size());
  for (std::size_t k = 0; k < config.branches.size(); ++k) {
    BasicTensor<T>& fused = fuse_branch(tape, features, config.branches[k], params);
    outputs.push_back(branch_head(tape, fused, config.branches[k], k, params));
  }
  return outputs;
}

#define MBFCN_INSTANTIATE_MODEL(T)                                                                \
  template struct ModelParams<T>;                                                                 \
  template ModelParams<T> build_model<T>(const ModelConfig&, std::uint64_t);                      \
  template void check_params(const ModelConfig&, const ModelParams<T>&);                          \
  template FeatureMaps<T> extract_features(Tape<T>&, BasicTensor<T>&, const BackboneConfig&,      \
                                           ModelParams<T>&);                                      \
  template BasicTensor<T>& fuse_branch(Tape<T>&, const FeatureMaps<T>&, const BranchConfig&,      \
                                       ModelParams<T>&);                                          \
  template HeadOutput<T> branch_head(Tape<T>&, BasicTensor<T>&, const BranchConfig&, std::size_t, \
                                     ModelParams<T>&);                                            \
  template std::vector<HeadOutput<T>> forward(Tape<T>&, BasicTensor<T>&, const ModelConfig&,      \
                                              ModelParams<T>&);

MBFCN_INSTANTIATE_MODEL(float)
MBFCN_INSTANTIATE_MODEL(double)

}  // namespace mbfcn
