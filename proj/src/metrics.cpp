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

#include "pushpull/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pushpull/errors.hpp"

namespace pushpull {

void CorruptionErrorMatrix::validate() const {
  auto check = [&](double v, const std::string& where) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw RangeError("error matrix '" + model_id + "': " + where + " = " + std::to_string(v) +
                       " outside [0, 1]");
    }
  };
  check(clean_error, "clean");
  for (CorruptionKind k : kAllCorruptions) {
    for (std::size_t s = 0; s < kNumSeverities; ++s) {
      check(errors[index_of(k)][s], std::string(to_string(k)) + "/" + std::to_string(s + 1));
    }
  }
}

double corruption_error(const CorruptionErrorMatrix& m, CorruptionKind kind) {
  double sum = 0.0;
  for (double e : m.errors[index_of(kind)]) sum += e;
  return sum / static_cast<double>(kNumSeverities);
}

double mce(const CorruptionErrorMatrix& m) {
  double sum = 0.0;
  for (CorruptionKind k : kAllCorruptions) sum += corruption_error(m, k);
  return sum / static_cast<double>(kNumCorruptions);
}

std::array<double, kNumCorruptions> relative_corruption_errors(
    const CorruptionErrorMatrix& model, const CorruptionErrorMatrix& baseline) {
  std::array<double, kNumCorruptions> out{};
  for (CorruptionKind k : kAllCorruptions) {
    const double base = corruption_error(baseline, k);
    if (base == 0.0) {
      throw ContractError("relative corruption error: baseline '" + baseline.model_id +
                          "' has zero CE for " + std::string(to_string(k)));
    }
    out[index_of(k)] = corruption_error(model, k) / base;
  }
  return out;
}

double mrce(const CorruptionErrorMatrix& model, const CorruptionErrorMatrix& baseline) {
  const auto rel = relative_corruption_errors(model, baseline);
  double sum = 0.0;
  for (double r : rel) sum += r;
  return sum / static_cast<double>(kNumCorruptions);
}

std::array<GroupStatistic, 3> grouped_mrce(const CorruptionErrorMatrix& model,
                                           const CorruptionErrorMatrix& baseline,
                                           Dispersion dispersion) {
  const auto rel = relative_corruption_errors(model, baseline);
  std::array<GroupStatistic, 3> out{};
  for (CorruptionKind k : kAllCorruptions) {
    auto& g = out[static_cast<std::size_t>(frequency_group(k))];
    g.mean += rel[index_of(k)];
    ++g.count;
  }
  for (auto& g : out) g.mean /= static_cast<double>(g.count);
  for (CorruptionKind k : kAllCorruptions) {
    auto& g = out[static_cast<std::size_t>(frequency_group(k))];
    const double d = rel[index_of(k)] - g.mean;
    g.dispersion += d * d;
  }
  for (auto& g : out) {
    const double denom =
        dispersion == Dispersion::kSample ? static_cast<double>(g.count - 1) : static_cast<double>(g.count);
    g.dispersion = std::sqrt(g.dispersion / denom);
  }
  return out;
}

BetaMode parse_beta_mode(const std::string& text) {
  if (text == "difficulty") return BetaMode::difficulty();
  if (text == "equal") return BetaMode::equal();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v)) {
    throw ConfigError("beta mode must be 'difficulty', 'equal' or a number, got '" + text + "'");
  }
  return BetaMode::custom(v);
}

std::string to_string(const BetaMode& mode) {
  switch (mode.kind) {
    case BetaMode::Kind::kDifficulty:
      return "difficulty";
    case BetaMode::Kind::kEqual:
      return "equal";
    case BetaMode::Kind::kCustom: {
      std::ostringstream os;
      os << std::setprecision(17) << mode.value;
      return os.str();
    }
  }
  return "unknown";
}

TradeoffReport net_reduction(double clean_error, double mce_value, double baseline_clean_error,
                             double baseline_mce, BetaMode beta_mode, std::string baseline_id) {
  if (!(baseline_clean_error > 0.0)) {
    throw ContractError("net_reduction: baseline clean error must be positive");
  }
  if (!(baseline_mce > 0.0)) throw ContractError("net_reduction: baseline mCE must be positive");
  TradeoffReport r;
  r.baseline_id = std::move(baseline_id);
  switch (beta_mode.kind) {
    case BetaMode::Kind::kDifficulty:
      r.beta = baseline_mce / baseline_clean_error;
      break;
    case BetaMode::Kind::kEqual:
      r.beta = 1.0;
      break;
    case BetaMode::Kind::kCustom:
      r.beta = beta_mode.value;
      break;
  }
  r.r_e = (baseline_clean_error - clean_error) / baseline_clean_error;
  r.r_mce = (baseline_mce - mce_value) / baseline_mce;
  r.r_net = (r.r_e + r.beta * r.r_mce) / 2.0;
  return r;
}

void write_matrix_csv(std::ostream& os, const CorruptionErrorMatrix& m) {
  os << "kind,s1,s2,s3,s4,s5\n" << std::setprecision(17);
  for (CorruptionKind k : kAllCorruptions) {
    os << to_string(k);
    for (double e : m.errors[index_of(k)]) os << ',' << e;
    os << '\n';
  }
  os << "clean," << m.clean_error << '\n';
}

void write_matrix_csv(const std::filesystem::path& path, const CorruptionErrorMatrix& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_matrix_csv(os, m);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_rate(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw FormatError("matrix CSV: bad number '" + text + "' at " + where);
  }
  return v;
}

}  // namespace

CorruptionErrorMatrix read_matrix_csv(std::istream& is, std::string model_id) {
  CorruptionErrorMatrix m;
  m.model_id = std::move(model_id);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("matrix CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "kind,s1,s2,s3,s4,s5") throw FormatError("matrix CSV: unexpected header '" + line + "'");
  for (CorruptionKind k : kAllCorruptions) {
    if (!std::getline(is, line)) {
      throw ContractError("matrix CSV: missing row for " + std::string(to_string(k)));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_csv(line);
    if (fields.empty() || fields[0] != to_string(k)) {
      throw ContractError("matrix CSV: expected row '" + std::string(to_string(k)) + "', got '" +
                          (fields.empty() ? std::string() : fields[0]) + "'");
    }
    if (fields.size() != kNumSeverities + 1) {
      throw FormatError("matrix CSV: row " + fields[0] + " has " + std::to_string(fields.size()) +
                        " fields");
    }
    for (std::size_t s = 0; s < kNumSeverities; ++s) {
      m.errors[index_of(k)][s] = parse_rate(fields[s + 1], fields[0]);
    }
  }
  if (!std::getline(is, line)) throw FormatError("matrix CSV: missing clean footer");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto fields = split_csv(line);
  if (fields.size() != 2 || fields[0] != "clean") {
    throw FormatError("matrix CSV: malformed clean footer '" + line + "'");
  }
  m.clean_error = parse_rate(fields[1], "clean");
  m.validate();
  return m;
}

CorruptionErrorMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return read_matrix_csv(is, path.stem().string());
}

}  // namespace pushpull
