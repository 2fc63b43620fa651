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

#include "pushpull/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "pushpull/errors.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

std::string to_string(Split split) { return split == Split::kTrain ? "train" : "test"; }

void Dataset::validate() const {
  if (images.rank() != 4 || images.dim(0) != labels.size() || images.dim(1) != 3 ||
      images.dim(2) != kCifarSide || images.dim(3) != kCifarSide) {
    throw DimensionError("dataset images " + shape_string(images.shape()) + " do not match " +
                         std::to_string(labels.size()) + " labels of 3x32x32");
  }
  for (int l : labels) {
    if (l < 0 || l >= static_cast<int>(kCifarClasses)) {
      throw FormatError("dataset label " + std::to_string(l) + " out of range");
    }
  }
  for (float v : images.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw FormatError("dataset pixel outside [0, 1]");
  }
}

Tensor<float> Dataset::gather_images(std::span<const std::size_t> indices) const {
  Tensor<float> out({indices.size(), 3, kCifarSide, kCifarSide});
  auto src = images.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) throw RangeError("dataset index out of range");
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(indices[i] * kCifarPixels), kCifarPixels,
                dst.begin() + static_cast<std::ptrdiff_t>(i * kCifarPixels));
  }
  return out;
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset read_cifar_records(std::span<const std::filesystem::path> paths, Split split) {
  std::vector<unsigned char> bytes;
  for (const auto& path : paths) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> chunk((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (chunk.size() % kCifarRecordBytes != 0) {
      throw FormatError("'" + path.string() + "': size " + std::to_string(chunk.size()) +
                        " is not a multiple of " + std::to_string(kCifarRecordBytes));
    }
    for (std::size_t r = 0; r < chunk.size(); r += kCifarRecordBytes) {
      if (chunk[r] > 9) {
        throw FormatError("'" + path.string() + "': record " + std::to_string(r / kCifarRecordBytes) +
                          " has label byte " + std::to_string(chunk[r]));
      }
    }
    bytes.insert(bytes.end(), chunk.begin(), chunk.end());
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  Dataset d;
  d.split = split;
  d.images = Tensor<float>({n, 3, kCifarSide, kCifarSide});
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
    d.labels[i] = rec[0];
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      d.images[i * kCifarPixels + j] = static_cast<float>(rec[1 + j]) / 255.0f;
    }
  }
  d.source_checksum = hex64(fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
  return d;
}

Dataset read_cifar_records(const std::filesystem::path& path, Split split) {
  return read_cifar_records(std::span<const std::filesystem::path>(&path, 1), split);
}

CifarSplits load_cifar10(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> train;
  for (int i = 1; i <= 5; ++i) train.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  const std::filesystem::path test = dir / "test_batch.bin";
  return {read_cifar_records(train, Split::kTrain), read_cifar_records(test, Split::kTest)};
}

void write_cifar_records(const std::filesystem::path& path, const Tensor<float>& images,
                         std::span<const int> labels) {
  require_rank(images, 4, "records");
  if (images.dim(0) != labels.size() || images.dim(1) * images.dim(2) * images.dim(3) != kCifarPixels) {
    throw DimensionError("records: images " + shape_string(images.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  std::vector<char> buf(labels.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] > 9) throw RangeError("records: label out of range");
    char* rec = buf.data() + i * kCifarRecordBytes;
    rec[0] = static_cast<char>(labels[i]);
    for (std::size_t j = 0; j < kCifarPixels; ++j) {
      const double v = std::clamp<double>(images[i * kCifarPixels + j], 0.0, 1.0);
      rec[1 + j] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

Dataset subset(const Dataset& dataset, std::size_t n, std::uint64_t seed, std::size_t num_classes) {
  if (n < num_classes) {
    throw ContractError("subset size " + std::to_string(n) + " below class count " +
                        std::to_string(num_classes));
  }
  if (n > dataset.size()) {
    throw ContractError("subset size " + std::to_string(n) + " exceeds dataset size " +
                        std::to_string(dataset.size()));
  }
  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class.at(static_cast<std::size_t>(dataset.labels[i])).push_back(i);
  }
  Rng rng(hash_seed(seed, {n}));
  for (auto& members : by_class) std::shuffle(members.begin(), members.end(), rng);

  // Base quota per class, remainder to classes chosen by a seeded order;
  // classes that run short hand their quota to the others.
  std::vector<std::size_t> quota(num_classes, n / num_classes);
  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < n % num_classes; ++k) ++quota[order[k]];
  std::size_t deficit = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (quota[c] > by_class[c].size()) {
      deficit += quota[c] - by_class[c].size();
      quota[c] = by_class[c].size();
    }
  }
  while (deficit > 0) {
    bool moved = false;
    for (std::size_t c : order) {
      if (deficit == 0) break;
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        --deficit;
        moved = true;
      }
    }
    if (!moved) throw ContractError("subset: not enough images to fill the quota");
  }
  std::vector<std::size_t> picked;
  picked.reserve(n);
  for (std::size_t c = 0; c < num_classes; ++c) {
    picked.insert(picked.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(picked.begin(), picked.end());
  Dataset out;
  out.images = dataset.gather_images(picked);
  out.labels = dataset.gather_labels(picked);
  out.split = dataset.split;
  out.source_checksum = dataset.source_checksum;
  out.subset_seed = seed;
  return out;
}

AugmentDraw augment_draw(std::uint64_t seed, std::uint64_t batch_index, std::uint64_t image_index) {
  const std::uint64_t h = hash_seed(seed, {batch_index, image_index});
  AugmentDraw d;
  d.flip = (h & 1u) != 0;
  d.dy = static_cast<std::size_t>((h >> 8) % 9);
  d.dx = static_cast<std::size_t>((h >> 24) % 9);
  return d;
}

void apply_augment(Tensor<float>& images, std::size_t n, const AugmentDraw& draw) {
  const std::size_t c_n = images.dim(1), h = images.dim(2), w = images.dim(3);
  std::vector<float> plane(h * w);
  for (std::size_t c = 0; c < c_n; ++c) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        // Padded coordinates: source pixel (y + dy - 4, x + dx - 4) after flip.
        const auto sy = static_cast<std::ptrdiff_t>(y + draw.dy) - 4;
        const auto sx = static_cast<std::ptrdiff_t>(x + draw.dx) - 4;
        float v = 0.0f;
        if (sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) && sx < static_cast<std::ptrdiff_t>(w)) {
          const std::size_t col = draw.flip ? w - 1 - static_cast<std::size_t>(sx) : static_cast<std::size_t>(sx);
          v = images.at(n, c, static_cast<std::size_t>(sy), col);
        }
        plane[y * w + x] = v;
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) images.at(n, c, y, x) = plane[y * w + x];
  }
}

Tensor<float> augment_batch(const Tensor<float>& images, std::uint64_t seed, std::uint64_t batch_index) {
  require_rank(images, 4, "augment batch");
  Tensor<float> out = images;
  for (std::size_t n = 0; n < images.dim(0); ++n) apply_augment(out, n, augment_draw(seed, batch_index, n));
  return out;
}

ChannelStatistics channel_statistics(const Dataset& dataset) {
  ChannelStatistics s;
  const std::size_t plane = kCifarSide * kCifarSide;
  const double count = static_cast<double>(dataset.size() * plane);
  if (count == 0.0) throw ContractError("channel statistics of an empty dataset");
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t n = 0; n < dataset.size(); ++n) {
      const float* p = dataset.images.data().data() + (n * 3 + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum += p[i];
        sq += static_cast<double>(p[i]) * p[i];
      }
    }
    s.mean[c] = sum / count;
    s.stddev[c] = std::sqrt(std::max(0.0, sq / count - s.mean[c] * s.mean[c]));
  }
  return s;
}

}  // namespace pushpull
