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
#include "mbfcn/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <sstream>

#include "mbfcn/dataset.hpp"
#include "mbfcn/error.hpp"
#include "mbfcn/log.hpp"

namespace mbfcn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool to_double(std::string_view s, double& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

bool to_count(std::string_view s, std::size_t& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool is_integer(std::string_view s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && p == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string shortest(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next line that is not blank.
  bool next(std::string& line) {
    while (next_raw(line)) {
      if (!trim(line).empty()) return true;
    }
    return false;
  }
  // Raw next line (may be blank); false at end of input.
  bool next_raw(std::string& line) {
    if (pushed_) {
      line = std::move(*pushed_);
      pushed_.reset();
    } else {
      if (!std::getline(in_, line)) return false;
      if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    ++line_no_;
    return true;
  }
  // Returns the line just read so the next call yields it again.
  void unread(std::string line) {
    pushed_ = std::move(line);
    --line_no_;
  }
  std::size_t line() const { return line_no_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
  std::optional<std::string> pushed_;
};

Box parse_box_fields(const std::vector<std::string_view>& f, LineReader& r, bool integers) {
  if (f.size() < 4) r.fail("expected 'x y w h', got " + std::to_string(f.size()) + " field(s)");
  double v[4];
  for (int i = 0; i < 4; ++i) {
    if (integers && !is_integer(f[i])) r.fail("box field '" + std::string(f[i]) + "' is not an integer");
    if (!to_double(f[i], v[i])) r.fail("box field '" + std::string(f[i]) + "' is not a number");
  }
  return {v[0], v[1], v[2], v[3]};
}

void keep_box(std::vector<Box>& gts, const Box& b, const LineReader& r) {
  if (b.valid()) {
    gts.push_back(b);
  } else {
    log_warning(r.source() + ":" + std::to_string(r.line()) + ": dropped degenerate box");
  }
}

// Byte-oriented reader for binary headers and checkpoints.
class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw FormatError("unexpected end of file at byte " + std::to_string(offset_ + got));
    }
    offset_ += n;
  }
  template <typename U>
  U get() {
    U v;
    read(&v, sizeof v);
    return v;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

template <typename U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor decode_image(std::string_view bytes, const std::string& source) {
  std::size_t pos = 0;
  auto token = [&]() -> std::string_view {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  const std::string_view magic = token();
  if (magic != "P6" && magic != "P5") {
    throw FormatError(source + ": not a binary PPM/PGM image (magic '" + std::string(magic) + "')");
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::size_t w = 0, h = 0, maxval = 0;
  if (!to_count(token(), w) || !to_count(token(), h) || !to_count(token(), maxval)) {
    throw FormatError(source + ": malformed image header");
  }
  if (maxval != 255) throw FormatError(source + ": unsupported maxval " + std::to_string(maxval));
  if (w == 0 || h == 0) throw FormatError(source + ": empty image");
  ++pos;  // single whitespace byte before the raster
  const std::size_t need = w * h * channels;
  if (pos > bytes.size() || bytes.size() - pos < need) {
    throw FormatError(source + ": unexpected end of file at byte " + std::to_string(bytes.size()));
  }
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  Tensor out({1, 3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = (y * w + x) * channels + (channels == 3 ? c : 0);
        out.at(0, c, y, x) = static_cast<float>(raster[src]) / 255.0f;
      }
    }
  }
  return out;
}

Tensor read_image(const std::filesystem::path& path) {
  return decode_image(read_file(path), path.string());
}

std::string encode_image(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) throw ConfigError("write_image expects shape (1, 3, h, w), got " + s.str());
  std::string out = "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
  out.reserve(out.size() + 3 * s.plane());
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(0, c, y, x), 0.0f, 1.0f);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
      }
    }
  }
  return out;
}

void write_image(const std::filesystem::path& path, const Tensor& image) {
  const std::string bytes = encode_image(image);
  std::ofstream out = open_out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

AnnotationFormat parse_annotation_format(std::string_view name) {
  if (name == "internal") return AnnotationFormat::internal;
  if (name == "wider") return AnnotationFormat::wider;
  throw ConfigError("unknown annotation format '" + std::string(name) + "' (expected internal or wider)");
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in, AnnotationFormat format,
                                                const std::string& source) {
  LineReader r(in, source);
  std::vector<AnnotationRecord> out;
  std::string line;
  while (r.next(line)) {
    AnnotationRecord rec;
    std::size_t n = 0;
    if (format == AnnotationFormat::internal) {
      const auto f = split_ws(line);
      if (f.size() != 2) r.fail("expected '<image_path> <count>'");
      if (!to_count(f[1], n)) r.fail("face count '" + std::string(f[1]) + "' is not a count");
      rec.path = std::string(f[0]);
    } else {
      rec.path = std::string(trim(line));
      if (!r.next(line)) r.fail("missing face count after '" + rec.path + "'");
      if (!to_count(trim(line), n)) r.fail("face count '" + std::string(trim(line)) + "' is not a count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!r.next_raw(line)) {
        r.fail("expected " + std::to_string(n) + " box line(s) for '" + rec.path + "', found " +
               std::to_string(i));
      }
      keep_box(rec.gts, parse_box_fields(split_ws(line), r, format == AnnotationFormat::wider), r);
    }
    if (format == AnnotationFormat::wider && n == 0) {
      // Some WIDER releases follow a zero count with one all-zero row.
      std::string peek;
      if (r.next_raw(peek)) {
        const auto f = split_ws(peek);
        const bool placeholder = f.size() >= 4 && std::all_of(f.begin(), f.end(), [](std::string_view t) {
          return t.find_first_not_of('0') == std::string_view::npos;
        });
        if (!placeholder) r.unread(std::move(peek));
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path,
                                               AnnotationFormat format) {
  std::ifstream in = open_in(path);
  return parse_annotations(in, format, path.string());
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  for (const AnnotationRecord& rec : records) {
    if (rec.path.empty() || rec.path.find_first_of(" \t\n") != std::string::npos) {
      throw InputError("annotation path '" + rec.path + "' must be non-empty without whitespace");
    }
    out << rec.path << ' ' << rec.gts.size() << '\n';
    for (const Box& b : rec.gts) {
      out << shortest(b.x) << ' ' << shortest(b.y) << ' ' << shortest(b.w) << ' ' << shortest(b.h)
          << '\n';
    }
  }
}

void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
  std::ofstream out = open_out(path);
  write_annotations(out, records);
  finish(out, path);
}

GroundTruthByImage ground_truth_by_image(const std::vector<AnnotationRecord>& records) {
  GroundTruthByImage out;
  for (const AnnotationRecord& rec : records) {
    auto& gts = out[rec.path];
    gts.insert(gts.end(), rec.gts.begin(), rec.gts.end());
  }
  return out;
}

void write_detections(std::ostream& out, const DetectionsByImage& dets) {
  char buf[160];
  for (const auto& [id, list] : dets) {
    out << "# " << id << '\n';
    for (const Detection& d : list) {
      std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f %.6f\n", d.box.x, d.box.y, d.box.w, d.box.h,
                    d.score);
      out << buf;
    }
  }
}

void save_detections(const std::filesystem::path& path, const DetectionsByImage& dets) {
  std::ofstream out = open_out(path);
  write_detections(out, dets);
  finish(out, path);
}

DetectionsByImage parse_detections(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  DetectionsByImage out;
  std::vector<Detection>* current = nullptr;
  std::string id;
  std::string line;
  while (r.next(line)) {
    const std::string_view t = trim(line);
    if (t.front() == '#') {
      id = std::string(trim(t.substr(1)));
      if (id.empty()) r.fail("empty image id");
      current = &out[id];
      continue;
    }
    if (!current) r.fail("detection before the first '# <image_id>' header");
    const auto f = split_ws(t);
    if (f.size() != 5) r.fail("expected 'x y w h score'");
    double v[5];
    for (int i = 0; i < 5; ++i) {
      if (!to_double(f[i], v[i])) r.fail("field '" + std::string(f[i]) + "' is not a number");
    }
    current->push_back({{v[0], v[1], v[2], v[3]}, v[4], 0, id});
  }
  return out;
}

DetectionsByImage load_detections(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return parse_detections(in, path.string());
}

void write_checkpoint(std::ostream& out, const ModelParams<float>& params,
                      const std::string& config_text) {
  out.write("MBFC", 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config_text.size()));
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.entries.size()));
  for (const auto& [name, e] : params.entries) {
    if (name.size() > 0xFFFF) throw InputError("tensor name too long: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& s = e.tensor.shape();
    for (std::size_t d : {s.n, s.c, s.h, s.w}) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(e.tensor.data().data()),
              static_cast<std::streamsize>(e.tensor.size() * sizeof(float)));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  ByteReader r(in);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "MBFC", 4) != 0) throw FormatError("not an MB-FCN checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  ck.config_text.resize(r.get<std::uint32_t>());
  r.read(ck.config_text.data(), ck.config_text.size());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.get<std::uint16_t>(), '\0');
    r.read(name.data(), name.size());
    Shape s;
    s.n = r.get<std::uint32_t>();
    s.c = r.get<std::uint32_t>();
    s.h = r.get<std::uint32_t>();
    s.w = r.get<std::uint32_t>();
    if (s.size() > (std::size_t{1} << 28)) {
      throw FormatError("tensor '" + name + "' is implausibly large: " + s.str());
    }
    std::vector<float> data(s.size());
    r.read(data.data(), data.size() * sizeof(float));
    const bool trainable = !name.starts_with("filler.");
    if (!ck.params.entries.emplace(name, ModelParams<float>::Entry{Tensor(s, std::move(data)), trainable})
             .second) {
      throw FormatError("duplicate tensor '" + name + "' in checkpoint");
    }
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const std::string& config_text) {
  std::ofstream out = open_out(path, std::ios::binary);
  write_checkpoint(out, params, config_text);
  finish(out, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

DiskDataset DiskDataset::from_annotations(const std::filesystem::path& annotation_file) {
  const auto records = load_annotations(annotation_file, AnnotationFormat::internal);
  const std::filesystem::path base = annotation_file.parent_path();
  std::vector<Entry> entries;
  entries.reserve(records.size());
  for (const AnnotationRecord& rec : records) entries.push_back({rec.path, base / rec.path, rec.gts});
  return DiskDataset(std::move(entries));
}

DatasetSlice::DatasetSlice(const Dataset& base, std::size_t first, std::size_t count)
    : base_(base), first_(first), count_(count) {
  if (first > base.size() || count > base.size() - first) {
    throw ConfigError("dataset slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                      ") exceeds dataset size " + std::to_string(base.size()));
  }
}

AnnotatedImage DatasetSlice::get(std::size_t index) const {
  if (index >= count_) throw ConfigError("dataset slice index out of range");
  return base_.get(first_ + index);
}

AnnotatedImage DiskDataset::get(std::size_t index) const {
  const Entry& e = entries_.at(index);
  return {e.image_id, read_image(e.path), e.gts};
}

}  // namespace mbfcn
