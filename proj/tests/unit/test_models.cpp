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

#include <random>

#include "pushpull/errors.hpp"
#include "pushpull/models.hpp"

using namespace pushpull;

namespace {

// Counts parameters of a basic-block ResNet from its layout.
std::size_t expected_parameters(std::size_t stem, const std::vector<std::size_t>& widths,
                                const std::vector<std::size_t>& blocks, std::size_t classes) {
  std::size_t n = 3 * stem * 9 + 2 * stem;
  std::size_t in = stem;
  for (std::size_t s = 0; s < widths.size(); ++s)
    for (std::size_t b = 0; b < blocks[s]; ++b) {
      const std::size_t out = widths[s];
      n += in * out * 9 + 2 * out + out * out * 9 + 2 * out;
      if (in != out || (s > 0 && b == 0)) n += in * out + 2 * out;
      in = out;
    }
  return n + in * classes + classes;
}

ArchSpec spec(const std::string& name, StemKind stem = StemKind::kConv) {
  ArchSpec s;
  s.name = name;
  s.stem_kind = stem;
  return s;
}

}  // namespace

TEST(Classifier, Resnet8ParameterCount) {
  Classifier<float> m(spec("resnet8"), 1);
  EXPECT_EQ(m.parameter_count(), 87402u);
  EXPECT_EQ(m.parameter_count(), expected_parameters(64, {16, 32, 64}, {1, 1, 1}, 10));
}

TEST(Classifier, PushPullStemAddsOneAlphaPerFilter) {
  Classifier<float> conv(spec("resnet8"), 1);
  Classifier<float> pp(spec("resnet8", StemKind::kPushPull), 1);
  EXPECT_EQ(pp.parameter_count(), conv.parameter_count() + 64);
  ArchSpec fixed = spec("resnet8", StemKind::kPushPull);
  fixed.pushpull.alpha = AlphaMode::fixed(1.0);
  Classifier<float> pf(fixed, 1);
  EXPECT_EQ(pf.parameter_count(), conv.parameter_count());
}

TEST(Classifier, LargerVariantsMatchLayoutCount) {
  Classifier<float> r14(spec("resnet14"), 1);
  EXPECT_EQ(r14.parameter_count(), expected_parameters(64, {16, 32, 64}, {2, 2, 2}, 10));
  Classifier<float> r18(spec("resnet18-cifar"), 1);
  EXPECT_EQ(r18.parameter_count(), expected_parameters(64, {64, 128, 256, 512}, {2, 2, 2, 2}, 10));
}

TEST(Classifier, ForwardShapeAndDeterministicInit) {
  Classifier<float> a(spec("resnet8", StemKind::kPushPull), 7);
  Classifier<float> b(spec("resnet8", StemKind::kPushPull), 7);
  Tensor<float> x({2, 3, 32, 32}, 0.5f);
  Tape<float> ta, tb;
  const Var ya = a.forward(ta, x, false);
  const Var yb = b.forward(tb, x, false);
  ASSERT_EQ(ta.value(ya).shape(), (Shape{2, 10}));
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(ta.value(ya)[i], tb.value(yb)[i]);
}

TEST(Classifier, RejectsWrongChannelCount) {
  Classifier<float> m(spec("resnet8"), 1);
  Tape<float> t;
  EXPECT_THROW(m.forward(t, Tensor<float>({1, 1, 32, 32}), false), DimensionError);
}

TEST(ArchSpec, RejectsUnknownNamesAndStemGeometry) {
  EXPECT_THROW(spec("resnet9").validate(), ConfigError);
  ArchSpec s = spec("resnet8");
  s.stem_kernel = 7;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(parse_stem_kind("blur"), ConfigError);
  EXPECT_EQ(parse_stem_kind("pushpull"), StemKind::kPushPull);
}

TEST(ReplaceStem, KeepsPushWeightsAndPreservesForwardAtAlphaZero) {
  Classifier<double> conv(spec("resnet8"), 3);
  PushPullConfig c = conv.spec().stem_pushpull_config();
  c.alpha = AlphaMode::fixed(0.0);
  const Tensor<double> w = conv.conv_stem()->weight.value;
  Classifier<double> pp = replace_stem(conv, c);
  ASSERT_TRUE(pp.has_pushpull_stem());
  EXPECT_EQ(pp.pushpull_stem()->push_weights().value.storage(), w.storage());

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<double> x({1, 3, 32, 32});
  for (double& v : x.data()) v = u(rng);
  // With alpha = 0 the unit is relu(conv), and the stem BN sees a rectified
  // input instead of the raw convolution, so outputs differ in general; the
  // stem response itself must match.
  const auto resp = pushpull_response<double>(x, w, pp.pushpull_stem()->alpha().value.data(), {}, c);
  const auto raw = kernels::conv2d_forward(x, w, {1, 1});
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_DOUBLE_EQ(resp[i], std::max(raw[i], 0.0));
}

TEST(ReplaceStem, RejectsGeometryMismatchAndDoubleReplacement) {
  Classifier<double> conv(spec("resnet8"), 3);
  PushPullConfig c = conv.spec().stem_pushpull_config();
  c.kernel_size = 5;
  EXPECT_THROW(replace_stem(conv, c), ConfigError);
  Classifier<double> pp(spec("resnet8", StemKind::kPushPull), 3);
  EXPECT_THROW(replace_stem(pp, pp.spec().stem_pushpull_config()), ConfigError);
}

TEST(ArgmaxRows, TiesResolveToSmallestIndex) {
  Tensor<float> z({3, 4});
  z.storage() = {1, 3, 3, 0, 2, 2, 2, 2, -1, -5, 0, 0};
  EXPECT_EQ(argmax_rows(z), (std::vector<int>{1, 0, 2}));
}

TEST(Classifier, StateCoversParametersAndRunningStats) {
  Classifier<float> m(spec("resnet8", StemKind::kPushPull), 1);
  const auto st = m.state();
  bool saw_alpha = false, saw_running = false;
  for (const auto& e : st) {
    if (e.name == "stem.alpha") saw_alpha = true;
    if (e.name.find("running_mean") != std::string::npos) saw_running = true;
  }
  EXPECT_TRUE(saw_alpha);
  EXPECT_TRUE(saw_running);
}
