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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pushpull/models.hpp"

namespace pushpull {

struct ExperimentConfig {
  // Root of every derived seed (train, augment, subset, corrupt, snr).
  std::uint64_t seed = 0;

  struct Model {
    std::string arch = "resnet8";
    std::string stem = "conv";
  } model;

  struct PushPull {
    std::size_t avg_size = 0;
    std::string alpha_mode = "trainable";  // trainable | fixed
    double alpha = 1.0;                    // initial or fixed value
    bool detach_extrema = false;
    std::vector<double> alpha_sweep{0.5, 1, 2, 3, 4, 5, 6};
  } pushpull;

  struct Train {
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    double lr_start = 0.05;
    double lr_peak = 1.0;
    double lr_end = 5e-5;
    double warm_frac = 0.3;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    std::optional<std::uint64_t> seed;  // default: derived from the root seed
    std::size_t subset_n = 0;           // 0 = whole training split
    bool augment = true;
  } train;

  struct Data {
    std::string cifar_dir;
    std::string corrupted_dir;
    std::string run_dir = "runs/default";
    std::size_t test_subset_n = 0;  // 0 = whole test split
  } data;

  struct Eval {
    std::string beta_mode = "difficulty";
    std::string dispersion = "sample";  // sample | population
    std::size_t batch_size = 256;
  } eval;

  struct Corrupt {
    std::optional<std::uint64_t> seed;
    std::string table_version = "desk32-v1";
  } corrupt;

  // Throws ConfigError on out-of-range values.
  void validate() const;

  ArchSpec arch_spec() const;
  std::uint64_t train_seed() const;
  std::uint64_t corrupt_seed() const;
  std::uint64_t derived_seed(const std::string& label) const;

  nlohmann::json to_json() const;
  // Unknown keys and ill-typed values raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Applies one `section.key=value` override; the value is read as JSON when
  // it parses, otherwise as a string.
  void apply_override(const std::string& assignment);

  // FNV-1a over the canonical JSON dump.
  std::string hash() const;
};

}  // namespace pushpull
