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

#include "pushpull/config.hpp"
#include "pushpull/errors.hpp"

using namespace pushpull;

TEST(Config, DefaultsFollowTheTrainingRecipe) {
  const ExperimentConfig c;
  EXPECT_EQ(c.train.epochs, 20u);
  EXPECT_EQ(c.train.batch_size, 128u);
  EXPECT_DOUBLE_EQ(c.train.lr_start, 0.05);
  EXPECT_DOUBLE_EQ(c.train.lr_peak, 1.0);
  EXPECT_DOUBLE_EQ(c.train.lr_end, 5e-5);
  EXPECT_DOUBLE_EQ(c.train.momentum, 0.9);
  EXPECT_DOUBLE_EQ(c.train.weight_decay, 1e-5);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.arch_spec().stem_filters, 64u);
}

TEST(Config, JsonRoundTripPreservesHash) {
  ExperimentConfig c;
  c.seed = 5;
  c.model.stem = "pushpull";
  c.pushpull.avg_size = 3;
  c.train.seed = 99;
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(back.train_seed(), 99u);
  EXPECT_NE(ExperimentConfig{}.hash(), c.hash());
}

TEST(Config, PartialDocumentMergesOverDefaults) {
  const auto c = ExperimentConfig::from_json(nlohmann::json::parse(R"({"train":{"epochs":3}})"));
  EXPECT_EQ(c.train.epochs, 3u);
  EXPECT_EQ(c.train.batch_size, 128u);
}

TEST(Config, UnknownKeysAndBadTypesAreRejected) {
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"trian":{}})")), ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"train":{"epoch":3}})")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"train":{"epochs":"x"}})")),
               ConfigError);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"seed":-1})")), ConfigError);
}

TEST(Config, OverridesParseJsonValues) {
  ExperimentConfig c;
  c.apply_override("train.epochs=2");
  c.apply_override("model.stem=pushpull");
  c.apply_override("pushpull.alpha_sweep=[1,2]");
  c.apply_override("train.seed=17");
  EXPECT_EQ(c.train.epochs, 2u);
  EXPECT_EQ(c.model.stem, "pushpull");
  EXPECT_EQ(c.pushpull.alpha_sweep, (std::vector<double>{1, 2}));
  EXPECT_EQ(c.train_seed(), 17u);
  EXPECT_THROW(c.apply_override("train.epochs"), ConfigError);
  EXPECT_THROW(c.apply_override("train.nope=1"), ConfigError);
}

TEST(Config, ValidationCatchesBadValues) {
  ExperimentConfig c;
  c.pushpull.avg_size = 4;
  c.model.stem = "pushpull";
  EXPECT_THROW(c.validate(), ConfigError);
  ExperimentConfig d;
  d.train.warm_frac = 1.5;
  EXPECT_THROW(d.validate(), ConfigError);
  ExperimentConfig e;
  e.eval.beta_mode = "hard";
  EXPECT_THROW(e.validate(), ConfigError);
}

TEST(Config, DerivedSeedsDifferByLabelAndRoot) {
  ExperimentConfig c;
  EXPECT_NE(c.derived_seed("augment"), c.derived_seed("subset"));
  const auto before = c.corrupt_seed();
  c.seed = 1;
  EXPECT_NE(c.corrupt_seed(), before);
  c.corrupt.seed = 5;
  EXPECT_EQ(c.corrupt_seed(), 5u);
}

TEST(Config, LoadReportsMissingAndMalformedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "pp_cfg";
  std::filesystem::create_directories(dir);
  EXPECT_THROW(ExperimentConfig::load(dir / "none.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ bad";
  EXPECT_THROW(ExperimentConfig::load(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "ok.json") << R"({"model":{"arch":"resnet14"}})";
  EXPECT_EQ(ExperimentConfig::load(dir / "ok.json").model.arch, "resnet14");
  std::filesystem::remove_all(dir);
}
