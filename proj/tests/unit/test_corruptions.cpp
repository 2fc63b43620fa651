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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "pushpull/corruptions.hpp"
#include "pushpull/dataset.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/jpeg.hpp"
#include "synthetic.hpp"

using namespace pushpull;
using namespace pushpull::testing;

namespace {

double mean_l2(const Tensor<float>& a, const Tensor<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return std::sqrt(s);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pp_corr_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Corruption, DeterministicAndInRangeForEveryKindAndSeverity) {
  const auto img = natural_like_image(32, 3);
  for (CorruptionKind k : kAllCorruptions)
    for (int s = 1; s <= 5; ++s) {
      const CorruptionSpec spec{k, s, 99};
      const auto a = apply_corruption(img, spec);
      const auto b = apply_corruption(img, spec);
      ASSERT_EQ(a.shape(), img.shape());
      EXPECT_EQ(a.storage(), b.storage()) << to_string(k) << " s" << s;
      for (float v : a.data()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
}

TEST(Corruption, DistortionGrowsWithSeverity) {
  for (CorruptionKind k : kAllCorruptions) {
    std::array<double, 5> d{};
    for (std::uint64_t i = 0; i < 8; ++i) {
      const auto img = natural_like_image(32, 100 + i);
      for (int s = 1; s <= 5; ++s)
        d[static_cast<std::size_t>(s - 1)] += mean_l2(apply_corruption(img, {k, s, 7 + i}), img);
    }
    for (int s = 1; s < 5; ++s) EXPECT_LT(d[s - 1], d[s]) << to_string(k) << " severity " << s;
  }
}

TEST(Corruption, DeterministicKindsIgnoreSeed) {
  const auto img = natural_like_image(32, 4);
  for (CorruptionKind k : kAllCorruptions) {
    const auto a = apply_corruption(img, {k, 3, 1});
    const auto b = apply_corruption(img, {k, 3, 2});
    if (is_stochastic(k)) {
      EXPECT_NE(a.storage(), b.storage()) << to_string(k);
    } else {
      EXPECT_EQ(a.storage(), b.storage()) << to_string(k);
    }
  }
}

TEST(Corruption, PixelateLeavesConstantImageUnchanged) {
  const Tensor<float> img({32, 32, 3}, 0.4f);
  for (int s = 1; s <= 5; ++s) {
    const auto out = apply_corruption(img, {CorruptionKind::kPixelate, s, 0});
    for (float v : out.data()) EXPECT_NEAR(v, 0.4f, 1e-6);
  }
}

TEST(Corruption, GaussianNoiseHasTableSigma) {
  const Tensor<float> img({64, 64, 3}, 0.5f);
  for (int s = 1; s <= 5; ++s) {
    const double sigma = SeverityTable::shipped().param(CorruptionKind::kGaussianNoise, "sigma", s);
    const auto out = apply_corruption(img, {CorruptionKind::kGaussianNoise, s, 5});
    double m = 0.0, v = 0.0;
    for (float x : out.data()) m += x;
    m /= static_cast<double>(out.size());
    for (float x : out.data()) v += (x - m) * (x - m);
    const double sd = std::sqrt(v / static_cast<double>(out.size()));
    EXPECT_NEAR(sd, sigma, 0.1 * sigma) << "severity " << s;
  }
}

TEST(Corruption, ContrastPreservesChannelMean) {
  const auto img = natural_like_image(32, 8);
  const auto out = apply_corruption(img, {CorruptionKind::kContrast, 5, 0});
  for (std::size_t c = 0; c < 3; ++c) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = c; i < img.size(); i += 3) {
      a += img[i];
      b += out[i];
    }
    EXPECT_NEAR(a / 1024.0, b / 1024.0, 1e-6);
  }
}

TEST(Corruption, RejectsBadSeverityAndInput) {
  const Tensor<float> img({32, 32, 3}, 0.5f);
  EXPECT_THROW(apply_corruption(img, {CorruptionKind::kFog, 0, 0}), RangeError);
  EXPECT_THROW(apply_corruption(img, {CorruptionKind::kFog, 6, 0}), RangeError);
  Tensor<float> bad = img;
  bad[5] = 1.5f;
  EXPECT_THROW(apply_corruption(bad, {CorruptionKind::kFog, 1, 0}), ContractError);
}

TEST(SeverityTable, ShippedTableIsMonotoneAndVersioned) {
  const auto& t = SeverityTable::shipped();
  EXPECT_EQ(t.version(), "desk32-v1");
  for (CorruptionKind k : kAllCorruptions) {
    const auto& name = t.principal(k);
    for (int s = 1; s < 5; ++s) {
      const double a = t.param(k, name, s), b = t.param(k, name, s + 1);
      if (t.increasing(k)) {
        EXPECT_LT(a, b) << to_string(k);
      } else {
        EXPECT_GT(a, b) << to_string(k);
      }
    }
  }
  EXPECT_THROW(t.param(CorruptionKind::kFog, "nope", 1), ConfigError);
}

TEST(SeverityTable, ParseRejectsMalformedAndNonMonotone) {
  EXPECT_THROW(SeverityTable::parse("{not json"), FormatError);
  EXPECT_THROW(SeverityTable::parse(R"({"version":"x","kinds":{}})"), FormatError);
  std::string good = R"({"version":"t","kinds":{)";
  bool first = true;
  for (CorruptionKind k : kAllCorruptions) {
    if (!first) good += ",";
    first = false;
    good += "\"" + std::string(to_string(k)) +
            R"(":{"principal":"p","direction":"increasing","params":{"p":[1,2,3,4,5]}})";
  }
  good += "}}";
  EXPECT_EQ(SeverityTable::parse(good).version(), "t");
  std::string bad = good;
  bad.replace(bad.find("[1,2,3,4,5]"), 11, "[1,2,2,4,5]");
  EXPECT_THROW(SeverityTable::parse(bad), ContractError);
}

TEST(Jpeg, DctIsOrthonormal) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-128, 127);
  jpeg::Block b;
  for (double& v : b) v = u(rng);
  const auto c = jpeg::forward_dct(b);
  double e0 = 0.0, e1 = 0.0;
  for (std::size_t i = 0; i < 64; ++i) {
    e0 += b[i] * b[i];
    e1 += c[i] * c[i];
  }
  EXPECT_NEAR(e0, e1, 1e-9 * e0);
  const auto back = jpeg::inverse_dct(c);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[i], b[i], 1e-10);
  jpeg::Block flat;
  flat.fill(8.0);
  EXPECT_NEAR(jpeg::forward_dct(flat)[0], 64.0, 1e-12);
}

TEST(Jpeg, QualityScalingFollowsIjg) {
  const auto q50 = jpeg::scale_table(jpeg::kLuminanceTable, 50);
  EXPECT_EQ(q50, jpeg::kLuminanceTable);
  const auto q100 = jpeg::scale_table(jpeg::kLuminanceTable, 100);
  for (int v : q100) EXPECT_EQ(v, 1);
  const auto q25 = jpeg::scale_table(jpeg::kLuminanceTable, 25);
  EXPECT_EQ(q25[0], (16 * 200 + 50) / 100);
}

TEST(CorruptionSeed, DependsOnEveryComponent) {
  const auto s = corruption_seed(1, 2, CorruptionKind::kSnow, 3);
  EXPECT_NE(s, corruption_seed(2, 2, CorruptionKind::kSnow, 3));
  EXPECT_NE(s, corruption_seed(1, 3, CorruptionKind::kSnow, 3));
  EXPECT_NE(s, corruption_seed(1, 2, CorruptionKind::kFog, 3));
  EXPECT_NE(s, corruption_seed(1, 2, CorruptionKind::kSnow, 4));
  EXPECT_EQ(s, corruption_seed(1, 2, CorruptionKind::kSnow, 3));
}

TEST(Materialize, WritesAllConditionsReproducibly) {
  const Dataset clean = synthetic_dataset(100, 5, Split::kTest);
  const auto dir = scratch("mat");
  const auto m = materialize_corrupted_set(clean, 11, dir, {false, 4});
  EXPECT_EQ(m.num_images, 100u);
  EXPECT_EQ(m.checksums.size(), kNumCorruptions);
  std::size_t records = 0;
  for (CorruptionKind k : kAllCorruptions)
    for (int s = 1; s <= 5; ++s) {
      const auto f = corrupted_file(dir, k, s);
      ASSERT_TRUE(std::filesystem::exists(f));
      records += std::filesystem::file_size(f) / kCifarRecordBytes;
    }
  EXPECT_EQ(records, 7500u);
  const auto clean_back = read_cifar_records(clean_file(dir), Split::kTest);
  EXPECT_EQ(clean_back.images.storage(), clean.images.storage());
  EXPECT_EQ(clean_back.labels, clean.labels);

  const auto read = CorruptedSetManifest::read(dir);
  EXPECT_EQ(read.global_seed, 11u);
  EXPECT_EQ(read.table_version, SeverityTable::shipped().version());
  EXPECT_EQ(read.checksums, m.checksums);

  EXPECT_THROW(materialize_corrupted_set(clean, 11, dir), IoError);
  const std::string before = read_bytes(corrupted_file(dir, CorruptionKind::kSnow, 4));
  const auto again = materialize_corrupted_set(clean, 11, dir, {true, 1});
  EXPECT_EQ(again.checksums, m.checksums);
  EXPECT_EQ(read_bytes(corrupted_file(dir, CorruptionKind::kSnow, 4)), before);

  const auto other = materialize_corrupted_set(clean, 12, dir, {true, 2});
  EXPECT_NE(other.checksums.at("gaussian_noise"), m.checksums.at("gaussian_noise"));
  EXPECT_EQ(other.checksums.at("pixelate"), m.checksums.at("pixelate"));
  std::filesystem::remove_all(dir);
}

TEST(Materialize, ManifestReadRejectsGarbage) {
  const auto dir = scratch("badmanifest");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.json") << "{ nope";
  EXPECT_THROW(CorruptedSetManifest::read(dir), FormatError);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(CorruptedSetManifest::read(dir), DataError);
}

TEST(ImageLayout, HwcRoundTrip) {
  const Dataset d = synthetic_dataset(3, 1);
  Tensor<float> copy(d.images.shape());
  for (std::size_t n = 0; n < 3; ++n) store_image_hwc(image_hwc(d.images, n), copy, n);
  EXPECT_EQ(copy.storage(), d.images.storage());
}
