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

#include "pushpull/corruption_kind.hpp"

#include <string>

#include "pushpull/errors.hpp"

namespace pushpull {
namespace {

struct KindInfo {
  std::string_view name;
  std::string_view code;
  bool stochastic;
  FrequencyGroup group;
};

constexpr std::array<KindInfo, kNumCorruptions> kInfo = {{
    {"gaussian_noise", "Ga", true, FrequencyGroup::kHigh},
    {"shot_noise", "Sh", true, FrequencyGroup::kHigh},
    {"impulse_noise", "Im", true, FrequencyGroup::kHigh},
    {"defocus_blur", "De", false, FrequencyGroup::kHigh},
    {"glass_blur", "Gl", true, FrequencyGroup::kMid},
    {"motion_blur", "Mo", false, FrequencyGroup::kMid},
    {"zoom_blur", "Zo", false, FrequencyGroup::kMid},
    {"snow", "Sn", true, FrequencyGroup::kMid},
    {"frost", "Fr", true, FrequencyGroup::kLow},
    {"fog", "Fo", true, FrequencyGroup::kLow},
    {"brightness", "Br", false, FrequencyGroup::kLow},
    {"contrast", "Co", false, FrequencyGroup::kLow},
    {"elastic", "El", true, FrequencyGroup::kMid},
    {"pixelate", "Pi", false, FrequencyGroup::kHigh},
    {"jpeg", "Jp", false, FrequencyGroup::kHigh},
}};

}  // namespace

std::string_view to_string(CorruptionKind kind) { return kInfo[index_of(kind)].name; }

std::string_view short_code(CorruptionKind kind) { return kInfo[index_of(kind)].code; }

CorruptionKind parse_corruption_kind(std::string_view name) {
  for (CorruptionKind k : kAllCorruptions) {
    if (kInfo[index_of(k)].name == name || kInfo[index_of(k)].code == name) return k;
  }
  throw ConfigError("unknown corruption kind '" + std::string(name) + "'");
}

bool is_stochastic(CorruptionKind kind) { return kInfo[index_of(kind)].stochastic; }

std::string_view to_string(FrequencyGroup group) {
  switch (group) {
    case FrequencyGroup::kLow:
      return "low";
    case FrequencyGroup::kMid:
      return "mid";
    case FrequencyGroup::kHigh:
      return "high";
  }
  return "unknown";
}

FrequencyGroup frequency_group(CorruptionKind kind) { return kInfo[index_of(kind)].group; }

}  // namespace pushpull
