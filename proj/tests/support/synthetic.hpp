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

#include "pushpull/dataset.hpp"

namespace pushpull::testing {

// Class-conditional procedural 32x32 images: each class has its own grating
// orientation, frequency and tint, drawn over a smooth random background with
// a random blob and pixel noise. Labels are balanced (i mod 10).
Dataset synthetic_dataset(std::size_t n, std::uint64_t seed, Split split = Split::kTrain);

// Writes data_batch_1..5.bin and test_batch.bin in the CIFAR-10 layout.
void write_synthetic_cifar_dir(const std::filesystem::path& dir, std::size_t train_per_batch,
                               std::size_t test_count, std::uint64_t seed);

// Smooth "natural-like" H x W x 3 image in [0,1]: low-frequency color field
// plus a few soft-edged shapes and mild texture.
Tensor<float> natural_like_image(std::size_t side, std::uint64_t seed);

}  // namespace pushpull::testing
