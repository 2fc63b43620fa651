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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pushpull/checkpoint.hpp"
#include "pushpull/errors.hpp"
#include "synthetic.hpp"

using namespace pushpull;
using namespace pushpull::testing;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pp_ckpt_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ArchSpec pushpull_spec(std::size_t avg = 5) {
  ArchSpec s;
  s.stem_kind = StemKind::kPushPull;
  s.pushpull.avg_size = avg;
  return s;
}

// Moves every state tensor away from its initial value.
void perturb(Classifier<float>& m) {
  float k = 0.001f;
  for (auto& e : m.state())
    for (float& v : e.tensor->data()) v += (k += 0.0001f);
  m.input_normalization().mean = {0.4, 0.5, 0.6};
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const auto dir = scratch("rt");
  Classifier<float> m(pushpull_spec(), 3);
  perturb(m);
  CheckpointMeta meta;
  meta.step = 42;
  meta.seed = 7;
  meta.metrics = {{"val_error", 0.25}};
  save_checkpoint(m, meta, dir / "a.ckpt");
  auto loaded = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(loaded.meta.step, 42);
  EXPECT_EQ(loaded.meta.seed, 7u);
  EXPECT_DOUBLE_EQ(loaded.meta.metrics.at("val_error").get<double>(), 0.25);
  save_checkpoint(loaded.model, loaded.meta, dir / "b.ckpt");
  EXPECT_EQ(read_bytes(dir / "a.ckpt"), read_bytes(dir / "b.ckpt"));

  const Dataset d = synthetic_dataset(4, 1);
  Tape<float> ta, tb;
  const auto& ya = ta.value(m.forward(ta, d.images, false));
  const auto& yb = tb.value(loaded.model.forward(tb, d.images, false));
  EXPECT_EQ(ya.storage(), yb.storage());
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, TamperedPayloadIsCorrupt) {
  const auto dir = scratch("tamper");
  Classifier<float> m(ArchSpec{}, 1);
  save_checkpoint(m, {}, dir / "a.ckpt");
  std::string bytes = read_bytes(dir / "a.ckpt");
  {
    std::ofstream out(dir / "trunc.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 3);
  }
  EXPECT_THROW(load_checkpoint(dir / "trunc.ckpt"), CorruptCheckpointError);
  {
    std::ofstream out(dir / "hdr.ckpt", std::ios::binary);
    out << "{\"format\": broken" << std::string(2, '\0') << "xxxx";
  }
  EXPECT_THROW(load_checkpoint(dir / "hdr.ckpt"), CorruptCheckpointError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), DataError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, ExpectedArchitectureMismatchesAreConfigErrors) {
  const auto dir = scratch("mismatch");
  Classifier<float> pp(pushpull_spec(5), 1);
  Classifier<float> conv(ArchSpec{}, 1);
  save_checkpoint(pp, {}, dir / "pp.ckpt");
  save_checkpoint(conv, {}, dir / "conv.ckpt");
  EXPECT_NO_THROW(load_checkpoint(dir / "pp.ckpt", pushpull_spec(5)));
  EXPECT_NO_THROW(load_checkpoint(dir / "conv.ckpt", ArchSpec{}));
  EXPECT_THROW(load_checkpoint(dir / "pp.ckpt", ArchSpec{}), ConfigError);
  EXPECT_THROW(load_checkpoint(dir / "conv.ckpt", pushpull_spec(5)), ConfigError);
  EXPECT_THROW(load_checkpoint(dir / "pp.ckpt", pushpull_spec(3)), ConfigError);
  ArchSpec fixed = pushpull_spec(5);
  fixed.pushpull.alpha = AlphaMode::fixed(1.0);
  EXPECT_THROW(load_checkpoint(dir / "pp.ckpt", fixed), ConfigError);
  ArchSpec r14;
  r14.name = "resnet14";
  EXPECT_THROW(load_checkpoint(dir / "conv.ckpt", r14), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(ArchJson, RoundTrip) {
  ArchSpec s = pushpull_spec(3);
  s.pushpull.alpha = AlphaMode::fixed(2.5);
  s.pushpull.detach_extrema = true;
  const ArchSpec back = arch_from_json(arch_to_json(s));
  EXPECT_EQ(back.name, s.name);
  EXPECT_EQ(back.stem_kind, StemKind::kPushPull);
  EXPECT_EQ(back.pushpull.avg_size, 3u);
  EXPECT_FALSE(back.pushpull.alpha.is_trainable());
  EXPECT_DOUBLE_EQ(back.pushpull.alpha.value, 2.5);
  EXPECT_TRUE(back.pushpull.detach_extrema);
}

TEST(StemWeights, ExportAndJsonRoundTrip) {
  const auto dir = scratch("stem");
  Classifier<float> m(pushpull_spec(5), 2);
  m.pushpull_stem()->alpha().value[3] = 0.25f;
  StemWeights w = export_stem(m);
  EXPECT_EQ(w.push.shape(), (Shape{64, 3, 3, 3}));
  ASSERT_EQ(w.alpha.size(), 64u);
  EXPECT_DOUBLE_EQ(w.alpha[3], 0.25);
  EXPECT_EQ(w.avg_size, 5u);
  w.edge_kernel = Tensor<double>({3, 3}, 0.5);
  write_stem_weights(dir / "s.json", w);
  const StemWeights back = read_stem_weights(dir / "s.json");
  EXPECT_EQ(back.push.storage(), w.push.storage());
  EXPECT_EQ(back.alpha, w.alpha);
  EXPECT_EQ(back.edge_kernel.storage(), w.edge_kernel.storage());

  Classifier<float> conv(ArchSpec{}, 2);
  EXPECT_TRUE(export_stem(conv).alpha.empty());
  std::filesystem::remove_all(dir);
}
