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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pushpull/corruption_kind.hpp"

namespace pushpull {

// Top-1 error per (corruption, severity) plus clean error. Rows follow the
// canonical corruption order.
struct CorruptionErrorMatrix {
  std::array<std::array<double, kNumSeverities>, kNumCorruptions> errors{};
  double clean_error = 0.0;
  std::string model_id;

  double& at(CorruptionKind kind, int severity) {
    return errors[index_of(kind)][static_cast<std::size_t>(severity - 1)];
  }
  double at(CorruptionKind kind, int severity) const {
    return errors[index_of(kind)][static_cast<std::size_t>(severity - 1)];
  }

  // Throws RangeError if any entry lies outside [0,1].
  void validate() const;
};

// Mean over the five severities of one corruption.
double corruption_error(const CorruptionErrorMatrix& m, CorruptionKind kind);

// Mean of the fifteen corruption errors (unnormalized).
double mce(const CorruptionErrorMatrix& m);

// CE^model_c / CE^baseline_c for every corruption; throws ContractError naming
// the corruption when a baseline CE is zero.
std::array<double, kNumCorruptions> relative_corruption_errors(
    const CorruptionErrorMatrix& model, const CorruptionErrorMatrix& baseline);

double mrce(const CorruptionErrorMatrix& model, const CorruptionErrorMatrix& baseline);

enum class Dispersion { kPopulation, kSample };

struct GroupStatistic {
  double mean = 0.0;
  double dispersion = 0.0;
  std::size_t count = 0;
};

// Mean and standard deviation of the relative corruption errors within each
// frequency group, indexed by FrequencyGroup.
std::array<GroupStatistic, 3> grouped_mrce(const CorruptionErrorMatrix& model,
                                           const CorruptionErrorMatrix& baseline,
                                           Dispersion dispersion = Dispersion::kSample);

struct BetaMode {
  enum class Kind { kDifficulty, kEqual, kCustom };
  Kind kind = Kind::kDifficulty;
  double value = 1.0;

  static BetaMode difficulty() { return {Kind::kDifficulty, 0.0}; }
  static BetaMode equal() { return {Kind::kEqual, 1.0}; }
  static BetaMode custom(double v) { return {Kind::kCustom, v}; }
};

// Parses "difficulty", "equal" or a number.
BetaMode parse_beta_mode(const std::string& text);
std::string to_string(const BetaMode& mode);

struct TradeoffReport {
  double r_e = 0.0;
  double r_mce = 0.0;
  double r_net = 0.0;
  double beta = 1.0;
  std::string baseline_id;
};

// R_E = (E0 - E)/E0, R_mCE = (mCE0 - mCE)/mCE0, R_net = (R_E + beta R_mCE)/2.
// Difficulty mode uses beta = mCE0/E0.
TradeoffReport net_reduction(double clean_error, double mce_value, double baseline_clean_error,
                             double baseline_mce, BetaMode beta_mode,
                             std::string baseline_id = {});

// CSV: header `kind,s1,s2,s3,s4,s5`, fifteen rows in canonical order, then a
// `clean,<E>` footer.
void write_matrix_csv(std::ostream& os, const CorruptionErrorMatrix& m);
void write_matrix_csv(const std::filesystem::path& path, const CorruptionErrorMatrix& m);
// Throws ContractError when rows are missing or out of canonical order.
CorruptionErrorMatrix read_matrix_csv(std::istream& is, std::string model_id = {});
CorruptionErrorMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace pushpull
