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
#include "mbfcn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mbfcn/error.hpp"
#include "mbfcn/io.hpp"
#include "mbfcn/log.hpp"
#include "mbfcn/rng.hpp"

namespace mbfcn {
namespace {

constexpr int kSubsamples = 4;

struct Canvas {
  std::size_t size;
  std::vector<double> px;  // 3 planes

  double& at(std::size_t c, std::size_t y, std::size_t x) { return px[(c * size + y) * size + x]; }
};

using Color = std::array<double, 3>;

// Alpha-blends color over the canvas using supersampled coverage of a
// shape given as an inside-test in pixel coordinates.
template <typename Inside>
void paint(Canvas& cv, double x0, double y0, double x1, double y1, const Color& color,
           Inside inside) {
  const auto lo = [](double v) { return static_cast<std::ptrdiff_t>(std::floor(v)); };
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cv.size);
  const std::ptrdiff_t ya = std::max<std::ptrdiff_t>(0, lo(y0));
  const std::ptrdiff_t yb = std::min<std::ptrdiff_t>(n - 1, lo(y1));
  const std::ptrdiff_t xa = std::max<std::ptrdiff_t>(0, lo(x0));
  const std::ptrdiff_t xb = std::min<std::ptrdiff_t>(n - 1, lo(x1));
  for (std::ptrdiff_t y = ya; y <= yb; ++y) {
    for (std::ptrdiff_t x = xa; x <= xb; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSubsamples; ++sy) {
        for (int sx = 0; sx < kSubsamples; ++sx) {
          const double px = static_cast<double>(x) + (sx + 0.5) / kSubsamples;
          const double py = static_cast<double>(y) + (sy + 0.5) / kSubsamples;
          if (inside(px, py)) ++hits;
        }
      }
      if (hits == 0) continue;
      const double a = static_cast<double>(hits) / (kSubsamples * kSubsamples);
      for (std::size_t c = 0; c < 3; ++c) {
        double& v = cv.at(c, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        v = v * (1.0 - a) + color[c] * a;
      }
    }
  }
}

void disc(Canvas& cv, double cx, double cy, double r, const Color& color) {
  paint(cv, cx - r, cy - r, cx + r, cy + r, color, [&](double x, double y) {
    return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  });
}

void ring(Canvas& cv, double cx, double cy, double r, double thickness, const Color& color) {
  const double inner = std::max(0.0, r - thickness);
  paint(cv, cx - r, cy - r, cx + r, cy + r, color, [&](double x, double y) {
    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    return d2 <= r * r && d2 >= inner * inner;
  });
}

void rect(Canvas& cv, double x, double y, double w, double h, const Color& color) {
  paint(cv, x, y, x + w, y + h, color,
        [&](double px, double py) { return px >= x && px < x + w && py >= y && py < y + h; });
}

Color tint(Rng& rng, double level, double spread) {
  Color c;
  for (double& v : c) v = std::clamp(level + rng.uniform(-spread, spread), 0.0, 1.0);
  return c;
}

// Light disc, dark border, dark eyes and mouth. Brightness and the dot
// geometry are jittered slightly per face.
void face_glyph(Canvas& cv, const Box& box, Rng& rng) {
  const double r = box.w / 2.0;
  const double cx = box.x + r;
  const double cy = box.y + r;
  const double skin = rng.uniform(0.55, 0.95);
  const double ink = rng.uniform(0.0, 0.3);
  disc(cv, cx, cy, r, tint(rng, skin, 0.05));
  ring(cv, cx, cy, r, std::max(1.0, 0.12 * r * 2.0 * rng.uniform(0.8, 1.2)), tint(rng, ink, 0.05));
  const Color dots = tint(rng, ink, 0.05);
  const double eye_dx = r * rng.uniform(0.32, 0.40);
  const double eye_dy = r * rng.uniform(0.20, 0.30);
  const double eye_r = std::max(0.6, r * rng.uniform(0.14, 0.18));
  disc(cv, cx - eye_dx, cy - eye_dy, eye_r, dots);
  disc(cv, cx + eye_dx, cy - eye_dy, eye_r, dots);
  disc(cv, cx, cy + r * rng.uniform(0.35, 0.45), std::max(0.6, r * rng.uniform(0.16, 0.22)), dots);
}

void clutter(Canvas& cv, Rng& rng, double lo, double hi) {
  const double n = static_cast<double>(cv.size);
  const double s = std::exp(rng.uniform(std::log(lo), std::log(hi)));
  const double x = rng.uniform(-0.25 * s, n - 0.75 * s);
  const double y = rng.uniform(-0.25 * s, n - 0.75 * s);
  const Color color = tint(rng, rng.uniform(0.0, 1.0), 0.1);
  switch (rng.index(3)) {
    case 0:
      rect(cv, x, y, s * rng.uniform(0.5, 1.5), s * rng.uniform(0.5, 1.5), color);
      break;
    case 1:
      ring(cv, x + s / 2, y + s / 2, s / 2, std::max(1.0, 0.12 * s), color);
      break;
    default: {
      disc(cv, x + s / 2, y + s / 2, s / 2, color);
      disc(cv, x + s / 2, y + s / 2, std::max(0.6, 0.15 * s), tint(rng, rng.uniform(0.0, 1.0), 0.1));
      break;
    }
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (image_size < 16) throw ConfigError("synthetic image_size must be >= 16");
  if (faces_min > faces_max) throw ConfigError("synthetic faces_min exceeds faces_max");
  if (clutter_min > clutter_max) throw ConfigError("synthetic clutter_min exceeds clutter_max");
  if (!(face_min > 0.0) || face_min > face_max) {
    throw ConfigError("synthetic face size range must satisfy 0 < min <= max");
  }
  if (face_max > static_cast<double>(image_size)) {
    throw ConfigError("synthetic face_max exceeds image_size");
  }
}

std::string synth_image_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%05zu.ppm", index);
  return buf;
}

AnnotatedImage synth_image(const SyntheticSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng(spec.seed, 0x1000 + index);
  const std::size_t n = spec.image_size;
  Canvas cv{n, std::vector<double>(3 * n * n)};

  const double gray = rng.uniform(0.25, 0.75);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double g = gray + rng.uniform(-0.08, 0.08);
    for (std::size_t c = 0; c < 3; ++c) cv.px[c * n * n + i] = g + rng.uniform(-0.03, 0.03);
  }

  const std::size_t n_clutter = spec.clutter_min + rng.index(spec.clutter_max - spec.clutter_min + 1);
  for (std::size_t i = 0; i < n_clutter; ++i) clutter(cv, rng, spec.face_min, spec.face_max);

  const std::size_t n_faces = spec.faces_min + rng.index(spec.faces_max - spec.faces_min + 1);
  std::vector<Box> gts;
  for (std::size_t f = 0; f < n_faces; ++f) {
    const double s = std::exp(rng.uniform(std::log(spec.face_min), std::log(spec.face_max)));
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Box b{rng.uniform(0.0, static_cast<double>(n) - s), rng.uniform(0.0, static_cast<double>(n) - s), s, s};
      const bool clear = std::all_of(gts.begin(), gts.end(),
                                     [&](const Box& g) { return iou(g, b) < kMaxFaceOverlap; });
      if (clear) {
        gts.push_back(b);
        placed = true;
      }
    }
    if (!placed) {
      log_warning(synth_image_id(index) + ": dropped a face after " +
                  std::to_string(kPlacementAttempts) + " placement attempts");
    }
  }
  // Larger faces first so small ones stay visible where they touch.
  std::vector<Box> order = gts;
  std::stable_sort(order.begin(), order.end(), [](const Box& a, const Box& b) { return a.w > b.w; });
  for (const Box& b : order) face_glyph(cv, b, rng);

  Tensor pixels({1, 3, n, n});
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(std::lround(std::clamp(cv.px[i], 0.0, 1.0) * 255.0)) / 255.0f;
  }
  return {synth_image_id(index), std::move(pixels), std::move(gts)};
}

InMemoryDataset synth_dataset(const SyntheticSpec& spec, std::size_t first, std::size_t count) {
  InMemoryDataset ds;
  for (std::size_t i = first; i < first + count; ++i) ds.add(synth_image(spec, i));
  return ds;
}

void synth_generate(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  std::vector<AnnotationRecord> records;
  for (std::size_t i = 0; i < spec.count; ++i) {
    AnnotatedImage img = synth_image(spec, i);
    write_image(dir / img.image_id, img.pixels);
    records.push_back({img.image_id, std::move(img.gts)});
  }
  save_annotations(dir / "annotations.txt", records);
}

}  // namespace mbfcn
