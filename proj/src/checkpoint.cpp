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

#include "pushpull/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pushpull/errors.hpp"

namespace pushpull {

using json = nlohmann::json;

namespace {

constexpr const char* kFormat = "pushpull-checkpoint";
constexpr int kFormatVersion = 1;

}  // namespace

json arch_to_json(const ArchSpec& spec) {
  const PushPullConfig& pp = spec.pushpull;
  return json{
      {"name", spec.name},
      {"num_classes", spec.num_classes},
      {"stem_kind", to_string(spec.stem_kind)},
      {"stem_filters", spec.stem_filters},
      {"stem_kernel", spec.stem_kernel},
      {"stem_stride", spec.stem_stride},
      {"pushpull",
       {{"avg_size", pp.avg_size},
        {"alpha_mode", pp.alpha.is_trainable() ? "trainable" : "fixed"},
        {"alpha_value", pp.alpha.value},
        {"detach_extrema", pp.detach_extrema},
        {"use_bias", pp.use_bias}}},
  };
}

ArchSpec arch_from_json(const json& doc) {
  try {
    ArchSpec s;
    s.name = doc.at("name").get<std::string>();
    s.num_classes = doc.at("num_classes").get<std::size_t>();
    s.stem_kind = parse_stem_kind(doc.at("stem_kind").get<std::string>());
    s.stem_filters = doc.at("stem_filters").get<std::size_t>();
    s.stem_kernel = doc.at("stem_kernel").get<std::size_t>();
    s.stem_stride = doc.at("stem_stride").get<std::size_t>();
    const json& pp = doc.at("pushpull");
    s.pushpull.avg_size = pp.at("avg_size").get<std::size_t>();
    const std::string mode = pp.at("alpha_mode").get<std::string>();
    const double value = pp.at("alpha_value").get<double>();
    if (mode == "trainable") {
      s.pushpull.alpha = AlphaMode::trainable(value);
    } else if (mode == "fixed") {
      s.pushpull.alpha = AlphaMode::fixed(value);
    } else {
      throw ConfigError("unknown alpha mode '" + mode + "'");
    }
    s.pushpull.detach_extrema = pp.at("detach_extrema").get<bool>();
    s.pushpull.use_bias = pp.at("use_bias").get<bool>();
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("architecture document: ") + e.what());
  }
}

void save_checkpoint(Classifier<float>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const auto entries = model.state();
  json tensors = json::array();
  std::size_t total = 0;
  for (const auto& e : entries) {
    tensors.push_back({{"name", e.name}, {"shape", e.tensor->shape()}});
    total += e.tensor->size();
  }
  const InputNormalization& norm = model.input_normalization();
  json header{
      {"format", kFormat},
      {"format_version", kFormatVersion},
      {"arch", arch_to_json(model.spec())},
      {"input_normalization", {{"mean", norm.mean}, {"stddev", norm.stddev}}},
      {"step", meta.step},
      {"seed", meta.seed},
      {"metrics", meta.metrics},
      {"tensors", tensors},
      {"total_scalars", total},
  };
  std::string bytes = header.dump(2);
  bytes.push_back('\0');
  bytes.push_back('\0');
  bytes.reserve(bytes.size() + total * 4);
  for (const auto& e : entries) {
    for (float v : e.tensor->data()) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t sep = bytes.find('\0');
  if (sep == std::string::npos || sep + 1 >= bytes.size() || bytes[sep + 1] != '\0') {
    throw CorruptCheckpointError("'" + path.string() + "': missing header separator");
  }
  json header;
  try {
    header = json::parse(bytes.substr(0, sep));
  } catch (const json::exception& e) {
    throw CorruptCheckpointError("'" + path.string() + "': bad header: " + e.what());
  }
  std::vector<std::pair<std::string, Shape>> declared;
  std::size_t total = 0;
  ArchSpec arch;
  LoadedCheckpoint out{Classifier<float>(ArchSpec{}, 0), {}};
  try {
    if (header.at("format").get<std::string>() != kFormat ||
        header.at("format_version").get<int>() != kFormatVersion) {
      throw CorruptCheckpointError("'" + path.string() + "': unsupported checkpoint format");
    }
    arch = arch_from_json(header.at("arch"));
    for (const json& t : header.at("tensors")) {
      declared.emplace_back(t.at("name").get<std::string>(), t.at("shape").get<Shape>());
    }
    total = header.at("total_scalars").get<std::size_t>();
    out.meta.step = header.at("step").get<long>();
    out.meta.seed = header.at("seed").get<std::uint64_t>();
    out.meta.metrics = header.at("metrics");
    out.model = Classifier<float>(arch, 0);
    const json& norm = header.at("input_normalization");
    out.model.input_normalization().mean = norm.at("mean").get<std::array<double, 3>>();
    out.model.input_normalization().stddev = norm.at("stddev").get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    throw CorruptCheckpointError("'" + path.string() + "': bad header: " + e.what());
  }
  const std::size_t payload = bytes.size() - sep - 2;
  if (payload != total * 4) {
    throw CorruptCheckpointError("'" + path.string() + "': payload has " + std::to_string(payload) +
                                 " bytes, header declares " + std::to_string(total * 4));
  }
  auto entries = out.model.state();
  if (entries.size() != declared.size()) {
    throw ConfigError("'" + path.string() + "': declares " + std::to_string(declared.size()) +
                      " tensors, architecture has " + std::to_string(entries.size()));
  }
  std::size_t sum = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != declared[i].first || entries[i].tensor->shape() != declared[i].second) {
      throw ConfigError("'" + path.string() + "': tensor " + declared[i].first + " " +
                        shape_string(declared[i].second) + " does not match architecture tensor " +
                        entries[i].name + " " + shape_string(entries[i].tensor->shape()));
    }
    sum += entries[i].tensor->size();
  }
  if (sum != total) throw CorruptCheckpointError("'" + path.string() + "': scalar count mismatch");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + sep + 2);
  for (auto& e : entries) {
    for (float& v : e.tensor->data()) {
      const std::uint32_t u = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                              (static_cast<std::uint32_t>(p[2]) << 16) |
                              (static_cast<std::uint32_t>(p[3]) << 24);
      v = std::bit_cast<float>(u);
      p += 4;
    }
  }
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ArchSpec& expected) {
  LoadedCheckpoint c = load_checkpoint(path);
  const ArchSpec& got = c.model.spec();
  auto mismatch = [&](const std::string& what) {
    throw ConfigError("'" + path.string() + "': checkpoint " + what + " does not match the requested architecture");
  };
  if (got.name != expected.name) mismatch("architecture name '" + got.name + "'");
  if (got.num_classes != expected.num_classes) mismatch("class count");
  if (got.stem_kind != expected.stem_kind) mismatch("stem kind '" + to_string(got.stem_kind) + "'");
  if (got.stem_kind == StemKind::kPushPull) {
    if (got.pushpull.avg_size != expected.pushpull.avg_size) mismatch("avg_size");
    if (got.pushpull.alpha.is_trainable() != expected.pushpull.alpha.is_trainable()) mismatch("alpha mode");
  }
  return c;
}

StemWeights export_stem(const Classifier<float>& model) {
  StemWeights w;
  if (const auto* pp = model.pushpull_stem()) {
    w.push = pp->push_weights().value.cast<double>();
    for (float a : pp->alpha().value.data()) w.alpha.push_back(a);
    w.avg_size = pp->config().avg_size;
  } else {
    w.push = model.conv_stem()->weight.value.cast<double>();
  }
  return w;
}

namespace {

json tensor_json(const Tensor<double>& t) {
  return json{{"shape", t.shape()}, {"values", t.storage()}};
}

Tensor<double> tensor_from_json(const json& doc) {
  return Tensor<double>(doc.at("shape").get<Shape>(), doc.at("values").get<std::vector<double>>());
}

}  // namespace

void write_stem_weights(const std::filesystem::path& path, const StemWeights& weights) {
  json doc{{"push_weight", tensor_json(weights.push)},
           {"alpha", weights.alpha},
           {"avg_size", weights.avg_size}};
  if (!weights.edge_kernel.empty()) doc["edge_kernel"] = tensor_json(weights.edge_kernel);
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << doc.dump(1) << '\n';
}

StemWeights read_stem_weights(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    const json doc = json::parse(is);
    StemWeights w;
    w.push = tensor_from_json(doc.at("push_weight"));
    w.alpha = doc.at("alpha").get<std::vector<double>>();
    w.avg_size = doc.at("avg_size").get<std::size_t>();
    if (doc.contains("edge_kernel")) w.edge_kernel = tensor_from_json(doc.at("edge_kernel"));
    if (w.push.rank() != 4) throw FormatError("push_weight must be rank 4");
    if (!w.alpha.empty() && w.alpha.size() != w.push.dim(0)) {
      throw FormatError("alpha length does not match the filter count");
    }
    return w;
  } catch (const json::exception& e) {
    throw FormatError("stem weights '" + path.string() + "': " + e.what());
  } catch (const DimensionError& e) {
    throw FormatError("stem weights '" + path.string() + "': " + e.what());
  }
}

}  // namespace pushpull
