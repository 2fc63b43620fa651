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
#include <cstddef>
#include <string>
#include <string_view>

namespace pushpull {

// Declaration order is the canonical order used by every serialized matrix.
enum class CorruptionKind : int {
  kGaussianNoise,
  kShotNoise,
  kImpulseNoise,
  kDefocusBlur,
  kGlassBlur,
  kMotionBlur,
  kZoomBlur,
  kSnow,
  kFrost,
  kFog,
  kBrightness,
  kContrast,
  kElastic,
  kPixelate,
  kJpeg,
};

inline constexpr std::size_t kNumCorruptions = 15;
inline constexpr std::size_t kNumSeverities = 5;

inline constexpr std::array<CorruptionKind, kNumCorruptions> kAllCorruptions = {
    CorruptionKind::kGaussianNoise, CorruptionKind::kShotNoise,  CorruptionKind::kImpulseNoise,
    CorruptionKind::kDefocusBlur,   CorruptionKind::kGlassBlur,  CorruptionKind::kMotionBlur,
    CorruptionKind::kZoomBlur,      CorruptionKind::kSnow,       CorruptionKind::kFrost,
    CorruptionKind::kFog,           CorruptionKind::kBrightness, CorruptionKind::kContrast,
    CorruptionKind::kElastic,       CorruptionKind::kPixelate,   CorruptionKind::kJpeg,
};

inline constexpr std::size_t index_of(CorruptionKind kind) {
  return static_cast<std::size_t>(kind);
}

// Snake-case identifier, e.g. "gaussian_noise".
std::string_view to_string(CorruptionKind kind);
// Two-letter column code, e.g. "Ga".
std::string_view short_code(CorruptionKind kind);
// Throws ConfigError for unknown names.
CorruptionKind parse_corruption_kind(std::string_view name);

// True for kinds whose output depends on the seed.
bool is_stochastic(CorruptionKind kind);

enum class FrequencyGroup { kLow, kMid, kHigh };

std::string_view to_string(FrequencyGroup group);

// low: frost, fog, brightness, contrast; mid: glass, motion, zoom, snow,
// elastic; high: everything else.
FrequencyGroup frequency_group(CorruptionKind kind);

}  // namespace pushpull
