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

#include <nlohmann/json.hpp>

#include "pushpull/models.hpp"

namespace pushpull {

nlohmann::json arch_to_json(const ArchSpec& spec);
// Throws ConfigError on missing or ill-typed fields.
ArchSpec arch_from_json(const nlohmann::json& doc);

struct CheckpointMeta {
  long step = 0;
  std::uint64_t seed = 0;
  nlohmann::json metrics = nlohmann::json::object();
};

// <path> = JSON header, "\0\0", then little-endian float32 payload in
// Classifier::state() order.
void save_checkpoint(Classifier<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  Classifier<float> model;
  CheckpointMeta meta;
};

// Throws CorruptCheckpointError when the payload length disagrees with the
// header and ConfigError when the declared tensors do not match the rebuilt
// architecture.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// As above, additionally requiring the stored architecture to match
// `expected` (name, class count, stem kind and PushPull settings).
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ArchSpec& expected);

// Stem weights in double precision, as exported for spectral analysis.
struct StemWeights {
  Tensor<double> push;         // O x I x kh x kw
  std::vector<double> alpha;   // empty for plain convolution stems
  std::size_t avg_size = 0;
  Tensor<double> edge_kernel;  // optional kh x kw kernel for the edge experiment
};

StemWeights export_stem(const Classifier<float>& model);
void write_stem_weights(const std::filesystem::path& path, const StemWeights& weights);
// Throws FormatError on malformed documents.
StemWeights read_stem_weights(const std::filesystem::path& path);

}  // namespace pushpull
