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

#include "pushpull/tensor.hpp"

namespace pushpull::jpeg {

using Block = std::array<double, 64>;
using QuantTable = std::array<int, 64>;

// Baseline tables from the JPEG standard (Annex K), row-major.
extern const QuantTable kLuminanceTable;
extern const QuantTable kChrominanceTable;

// IJG quality scaling; quality is clamped to [1, 100].
QuantTable scale_table(const QuantTable& base, int quality);

// Orthonormal 8x8 DCT-II and its inverse.
Block forward_dct(const Block& spatial);
Block inverse_dct(const Block& coefficients);

// Lossy encode/decode of an H x W x 3 image in [0,1]: 8-bit quantization,
// YCbCr, optional 4:2:0 chroma subsampling, block DCT, quantization and the
// inverse path. Edge blocks are padded by replication.
Tensor<float> roundtrip(const Tensor<float>& hwc, int quality, bool subsample_chroma);

}  // namespace pushpull::jpeg
