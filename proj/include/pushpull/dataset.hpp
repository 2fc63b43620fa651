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

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pushpull/tensor.hpp"

namespace pushpull {

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecordBytes = 1 + kCifarPixels;
inline constexpr std::size_t kCifarClasses = 10;

enum class Split { kTrain, kTest };

std::string to_string(Split split);

struct Dataset {
  Tensor<float> images;  // N x 3 x 32 x 32, values in [0,1]
  std::vector<int> labels;
  Split split = Split::kTrain;
  std::string source_checksum;
  std::uint64_t subset_seed = 0;

  std::size_t size() const { return labels.size(); }

  // Throws FormatError on out-of-range labels or pixels, DimensionError on
  // shape mismatch.
  void validate() const;

  // Gathers images[indices] into a new N' x 3 x 32 x 32 tensor.
  Tensor<float> gather_images(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
};

struct CifarSplits {
  Dataset train;
  Dataset test;
};

// Reads data_batch_1..5.bin and test_batch.bin.
CifarSplits load_cifar10(const std::filesystem::path& dir);

// Reads any number of concatenated 3073-byte records. Throws FormatError
// naming the file when its size is not a multiple of 3073 or a label is > 9.
Dataset read_cifar_records(const std::filesystem::path& path, Split split);
Dataset read_cifar_records(std::span<const std::filesystem::path> paths, Split split);

// Writes records with pixels rounded to the nearest byte.
void write_cifar_records(const std::filesystem::path& path, const Tensor<float>& images,
                         std::span<const int> labels);

// Class-stratified sample without replacement; per-class counts differ by at
// most one. Throws ContractError when n exceeds the dataset or is below the
// class count.
Dataset subset(const Dataset& dataset, std::size_t n, std::uint64_t seed,
               std::size_t num_classes = kCifarClasses);

struct AugmentDraw {
  bool flip = false;
  std::size_t dy = 4;  // crop offset into the 40 x 40 padded image
  std::size_t dx = 4;
};

AugmentDraw augment_draw(std::uint64_t seed, std::uint64_t batch_index, std::uint64_t image_index);

// Applies one draw to image n of an N x 3 x H x W tensor in place.
void apply_augment(Tensor<float>& images, std::size_t n, const AugmentDraw& draw);

// Flip with probability 1/2 and a random crop from the 4-pixel zero-padded
// image, deterministic per (seed, batch index, image index).
Tensor<float> augment_batch(const Tensor<float>& images, std::uint64_t seed,
                            std::uint64_t batch_index = 0);

struct ChannelStatistics {
  std::array<double, 3> mean{};
  std::array<double, 3> stddev{};
};

// Per-channel mean and population standard deviation over every pixel.
ChannelStatistics channel_statistics(const Dataset& dataset);

}  // namespace pushpull
