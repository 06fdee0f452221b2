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
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "mbfcn/boxes.hpp"
#include "mbfcn/tensor.hpp"

namespace mbfcn {

struct AnnotatedImage {
  std::string image_id;
  Tensor pixels;  // (1, 3, h, w) in [0, 1]
  std::vector<Box> gts;
};

class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual std::size_t size() const = 0;
  virtual AnnotatedImage get(std::size_t index) const = 0;
};

class InMemoryDataset : public Dataset {
 public:
  InMemoryDataset() = default;
  explicit InMemoryDataset(std::vector<AnnotatedImage> items) : items_(std::move(items)) {}

  std::size_t size() const override { return items_.size(); }
  AnnotatedImage get(std::size_t index) const override { return items_.at(index); }
  void add(AnnotatedImage item) { items_.push_back(std::move(item)); }

 private:
  std::vector<AnnotatedImage> items_;
};

// Contiguous range [first, first + count) of another dataset, which must
// outlive the view.
class DatasetSlice : public Dataset {
 public:
  DatasetSlice(const Dataset& base, std::size_t first, std::size_t count);

  std::size_t size() const override { return count_; }
  AnnotatedImage get(std::size_t index) const override;

 private:
  const Dataset& base_;
  std::size_t first_;
  std::size_t count_;
};

// Image paths plus annotations; pixels are decoded on every get().
class DiskDataset : public Dataset {
 public:
  struct Entry {
    std::string image_id;
    std::filesystem::path path;
    std::vector<Box> gts;
  };

  DiskDataset() = default;
  explicit DiskDataset(std::vector<Entry> entries) : entries_(std::move(entries)) {}
  // Loads an internal-format annotation file; image paths resolve relative
  // to the file's directory and the annotated path becomes the image id.
  static DiskDataset from_annotations(const std::filesystem::path& annotation_file);

  std::size_t size() const override { return entries_.size(); }
  AnnotatedImage get(std::size_t index) const override;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace mbfcn
