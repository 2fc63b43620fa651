/*
 * Copyright 2026 The PushPull Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pushpull/corruption_kind.hpp"
#include "pushpull/dataset.hpp"
#include "pushpull/tensor.hpp"

namespace pushpull {

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kGaussianNoise;
  int severity = 1;
  std::uint64_t seed = 0;

  // Throws RangeError for severities outside 1..5.
  void validate() const;
};

// Per-kind generator parameters for severities 1..5, parsed from the
// versioned JSON document under data/.
class SeverityTable {
 public:
  // The table compiled into this binary.
  static const SeverityTable& shipped();

  // Throws FormatError on malformed documents and ContractError when a
  // principal parameter is not strictly monotone in severity.
  static SeverityTable parse(const std::string& json_text);

  const std::string& version() const { return version_; }
  double param(CorruptionKind kind, const std::string& name, int severity) const;
  const std::string& principal(CorruptionKind kind) const;
  bool increasing(CorruptionKind kind) const;

 private:
  struct Entry {
    std::string principal;
    bool increasing = true;
    std::map<std::string, std::vector<double>> params;
  };
  std::string version_;
  std::vector<Entry> entries_;
};

// image: H x W x 3 in [0,1]. Output has the same size, clamped to [0,1],
// and is a pure function of (image, spec). Throws ContractError when the
// input leaves [0,1].
Tensor<float> apply_corruption(const Tensor<float>& image, const CorruptionSpec& spec,
                               const SeverityTable& table = SeverityTable::shipped());

// hash(seed, image_index, kind, severity).
std::uint64_t corruption_seed(std::uint64_t global_seed, std::uint64_t image_index,
                              CorruptionKind kind, int severity);

// Image n of an N x 3 x H x W batch as H x W x 3, and the inverse.
Tensor<float> image_hwc(const Tensor<float>& nchw, std::size_t n);
void store_image_hwc(const Tensor<float>& hwc, Tensor<float>& nchw, std::size_t n);

struct CorruptedSetManifest {
  int format_version = 1;
  std::uint64_t global_seed = 0;
  std::string table_version;
  std::size_t num_images = 0;
  std::string clean_checksum;
  // Keyed by kind name; checksum over the five severity files in order.
  std::map<std::string, std::string> checksums;

  static CorruptedSetManifest read(const std::filesystem::path& dir);
  void write(const std::filesystem::path& dir) const;
};

struct MaterializeOptions {
  bool overwrite = false;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Writes <out>/<kind>/<severity>/images.bin (CIFAR record layout) for every
// kind and severity, the clean images as <out>/clean/images.bin, and
// <out>/manifest.json. Throws IoError when `out`
// exists and is non-empty unless overwrite is set.
CorruptedSetManifest materialize_corrupted_set(const Dataset& clean_test, std::uint64_t seed,
                                               const std::filesystem::path& out,
                                               const MaterializeOptions& options = {});

std::filesystem::path corrupted_file(const std::filesystem::path& dir, CorruptionKind kind,
                                     int severity);
std::filesystem::path clean_file(const std::filesystem::path& dir);

}  // namespace pushpull
