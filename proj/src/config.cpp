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

#include "pushpull/config.hpp"

#include <fstream>

#include "pushpull/errors.hpp"
#include "pushpull/metrics.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

using json = nlohmann::json;

namespace {

json optional_seed(const std::optional<std::uint64_t>& s) { return s ? json(*s) : json(nullptr); }

// Recursively overlays `patch` onto `base`, rejecting keys absent from base.
void merge_strict(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else {
      slot = value;
    }
  }
}

template <typename T>
T read(const json& doc, const char* section, const char* key) {
  try {
    return doc.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + section + "." + key + "'");
  }
}

std::optional<std::uint64_t> read_seed(const json& doc, const char* section) {
  const json& v = doc.at(section).at("seed");
  if (v.is_null()) return std::nullopt;
  if (!v.is_number_unsigned()) {
    throw ConfigError(std::string("config: '") + section + ".seed' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

}  // namespace

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  arch_spec().validate();
  if (pushpull.alpha_mode != "trainable" && pushpull.alpha_mode != "fixed") {
    fail("pushpull.alpha_mode must be 'trainable' or 'fixed'");
  }
  if (train.epochs == 0) fail("train.epochs must be positive");
  if (train.batch_size == 0) fail("train.batch_size must be positive");
  if (!(train.lr_start > 0 && train.lr_peak > 0 && train.lr_end > 0)) fail("learning rates must be positive");
  if (!(train.warm_frac > 0 && train.warm_frac < 1)) fail("train.warm_frac must lie in (0, 1)");
  if (train.momentum < 0 || train.momentum >= 1) fail("train.momentum must lie in [0, 1)");
  if (train.weight_decay < 0) fail("train.weight_decay must be non-negative");
  if (eval.dispersion != "sample" && eval.dispersion != "population") {
    fail("eval.dispersion must be 'sample' or 'population'");
  }
  if (eval.batch_size == 0) fail("eval.batch_size must be positive");
  parse_beta_mode(eval.beta_mode);
}

ArchSpec ExperimentConfig::arch_spec() const {
  ArchSpec s;
  s.name = model.arch;
  s.stem_kind = parse_stem_kind(model.stem);
  s.pushpull.avg_size = pushpull.avg_size;
  s.pushpull.alpha = pushpull.alpha_mode == "fixed" ? AlphaMode::fixed(pushpull.alpha)
                                                    : AlphaMode::trainable(pushpull.alpha);
  s.pushpull.detach_extrema = pushpull.detach_extrema;
  return s;
}

std::uint64_t ExperimentConfig::derived_seed(const std::string& label) const {
  return derive_seed(seed, label);
}

std::uint64_t ExperimentConfig::train_seed() const { return train.seed.value_or(derived_seed("train")); }

std::uint64_t ExperimentConfig::corrupt_seed() const {
  return corrupt.seed.value_or(derived_seed("corrupt"));
}

json ExperimentConfig::to_json() const {
  return json{
      {"seed", seed},
      {"model", {{"arch", model.arch}, {"stem", model.stem}}},
      {"pushpull",
       {{"avg_size", pushpull.avg_size},
        {"alpha_mode", pushpull.alpha_mode},
        {"alpha", pushpull.alpha},
        {"detach_extrema", pushpull.detach_extrema},
        {"alpha_sweep", pushpull.alpha_sweep}}},
      {"train",
       {{"epochs", train.epochs},
        {"batch_size", train.batch_size},
        {"lr_start", train.lr_start},
        {"lr_peak", train.lr_peak},
        {"lr_end", train.lr_end},
        {"warm_frac", train.warm_frac},
        {"momentum", train.momentum},
        {"weight_decay", train.weight_decay},
        {"seed", optional_seed(train.seed)},
        {"subset_n", train.subset_n},
        {"augment", train.augment}}},
      {"data",
       {{"cifar_dir", data.cifar_dir},
        {"corrupted_dir", data.corrupted_dir},
        {"run_dir", data.run_dir},
        {"test_subset_n", data.test_subset_n}}},
      {"eval", {{"beta_mode", eval.beta_mode}, {"dispersion", eval.dispersion}, {"batch_size", eval.batch_size}}},
      {"corrupt", {{"seed", optional_seed(corrupt.seed)}, {"table_version", corrupt.table_version}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const json& patch) {
  json doc = ExperimentConfig{}.to_json();
  merge_strict(doc, patch, "");
  ExperimentConfig c;
  if (!doc.at("seed").is_number_unsigned()) {
    throw ConfigError("config: 'seed' must be a non-negative integer");
  }
  c.seed = doc.at("seed").get<std::uint64_t>();
  c.model.arch = read<std::string>(doc, "model", "arch");
  c.model.stem = read<std::string>(doc, "model", "stem");
  c.pushpull.avg_size = read<std::size_t>(doc, "pushpull", "avg_size");
  c.pushpull.alpha_mode = read<std::string>(doc, "pushpull", "alpha_mode");
  c.pushpull.alpha = read<double>(doc, "pushpull", "alpha");
  c.pushpull.detach_extrema = read<bool>(doc, "pushpull", "detach_extrema");
  c.pushpull.alpha_sweep = read<std::vector<double>>(doc, "pushpull", "alpha_sweep");
  c.train.epochs = read<std::size_t>(doc, "train", "epochs");
  c.train.batch_size = read<std::size_t>(doc, "train", "batch_size");
  c.train.lr_start = read<double>(doc, "train", "lr_start");
  c.train.lr_peak = read<double>(doc, "train", "lr_peak");
  c.train.lr_end = read<double>(doc, "train", "lr_end");
  c.train.warm_frac = read<double>(doc, "train", "warm_frac");
  c.train.momentum = read<double>(doc, "train", "momentum");
  c.train.weight_decay = read<double>(doc, "train", "weight_decay");
  c.train.seed = read_seed(doc, "train");
  c.train.subset_n = read<std::size_t>(doc, "train", "subset_n");
  c.train.augment = read<bool>(doc, "train", "augment");
  c.data.cifar_dir = read<std::string>(doc, "data", "cifar_dir");
  c.data.corrupted_dir = read<std::string>(doc, "data", "corrupted_dir");
  c.data.run_dir = read<std::string>(doc, "data", "run_dir");
  c.data.test_subset_n = read<std::size_t>(doc, "data", "test_subset_n");
  c.eval.beta_mode = read<std::string>(doc, "eval", "beta_mode");
  c.eval.dispersion = read<std::string>(doc, "eval", "dispersion");
  c.eval.batch_size = read<std::size_t>(doc, "eval", "batch_size");
  c.corrupt.seed = read_seed(doc, "corrupt");
  c.corrupt.table_version = read<std::string>(doc, "corrupt", "table_version");
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return from_json(doc);
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1)) {
    parts.push_back(rest.substr(0, dot));
  }
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  json doc = to_json();
  merge_strict(doc, patch, "");
  *this = from_json(doc);
}

std::string ExperimentConfig::hash() const {
  return hex64(fnv1a64(to_json().dump()));
}

}  // namespace pushpull
