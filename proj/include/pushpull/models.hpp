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
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pushpull/autodiff.hpp"
#include "pushpull/pushpull.hpp"

namespace pushpull {

enum class StemKind { kConv, kPushPull };

std::string to_string(StemKind kind);
StemKind parse_stem_kind(const std::string& text);

// Architecture descriptor. CIFAR variants share a 64-filter 3x3 stride-1 stem.
struct ArchSpec {
  std::string name = "resnet8";  // resnet8 | resnet14 | resnet18-cifar
  std::size_t num_classes = 10;
  StemKind stem_kind = StemKind::kConv;
  std::size_t stem_filters = 64;
  std::size_t stem_kernel = 3;
  std::size_t stem_stride = 1;
  // Used when stem_kind == kPushPull; geometry fields are overwritten from
  // the stem fields above.
  PushPullConfig pushpull;

  // Throws ConfigError for unknown names or a non-CIFAR stem geometry.
  void validate() const;
  PushPullConfig stem_pushpull_config() const;
};

std::vector<std::string> known_architectures();

// Per-channel input standardization applied before the stem.
struct InputNormalization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

template <typename T>
struct Conv2dLayer {
  Parameter<T> weight;
  std::optional<Parameter<T>> bias;
  ConvGeometry geometry;

  Var forward(Tape<T>& tape, Var x);
};

template <typename T>
struct BatchNormLayer {
  Parameter<T> gamma;
  Parameter<T> beta;
  BatchNormState<T> state;

  Var forward(Tape<T>& tape, Var x, bool training);
};

template <typename T>
struct LinearLayer {
  Parameter<T> weight;
  Parameter<T> bias;
};

template <typename T>
struct BasicBlock {
  Conv2dLayer<T> conv1;
  BatchNormLayer<T> bn1;
  Conv2dLayer<T> conv2;
  BatchNormLayer<T> bn2;
  std::optional<Conv2dLayer<T>> shortcut;
  std::optional<BatchNormLayer<T>> shortcut_bn;
};

// Persistable tensor of a model, in declaration order.
template <typename T>
struct StateEntry {
  std::string name;
  Tensor<T>* tensor;
};

// Basic-block ResNet: stem (conv or PushPull) -> BN -> ReLU -> residual
// stages -> global average pool -> linear head.
template <typename T>
class Classifier {
 public:
  using ConvStem = Conv2dLayer<T>;
  using PushPullStem = PushPullLayer<T>;

  Classifier(ArchSpec spec, std::uint64_t seed);

  const ArchSpec& spec() const { return spec_; }
  InputNormalization& input_normalization() { return input_norm_; }
  const InputNormalization& input_normalization() const { return input_norm_; }

  // images: N x 3 x 32 x 32 in [0,1]; returns logits N x num_classes.
  Var forward(Tape<T>& tape, const Tensor<T>& images, bool training);

  std::vector<Parameter<T>*> parameters();
  std::size_t parameter_count();
  void zero_grad();

  // Parameters, momentum buffers and batchnorm running statistics.
  std::vector<StateEntry<T>> state();

  bool has_pushpull_stem() const { return std::holds_alternative<PushPullStem>(stem_); }
  PushPullStem* pushpull_stem() { return std::get_if<PushPullStem>(&stem_); }
  const PushPullStem* pushpull_stem() const { return std::get_if<PushPullStem>(&stem_); }
  ConvStem* conv_stem() { return std::get_if<ConvStem>(&stem_); }
  const ConvStem* conv_stem() const { return std::get_if<ConvStem>(&stem_); }

  template <typename U>
  friend Classifier<U> replace_stem(Classifier<U> model, const PushPullConfig& config);

 private:
  ArchSpec spec_;
  InputNormalization input_norm_;
  std::variant<ConvStem, PushPullStem> stem_;
  BatchNormLayer<T> stem_bn_;
  std::vector<BasicBlock<T>> blocks_;
  LinearLayer<T> head_;
};

template <typename T>
Classifier<T> build_model(const ArchSpec& spec, std::uint64_t seed) {
  return Classifier<T>(spec, seed);
}

// Swaps the stem convolution for a PushPull unit that starts from the
// convolution's weights. The unit carries a bias iff the convolution did.
template <typename T>
Classifier<T> replace_stem(Classifier<T> model, const PushPullConfig& config);

template <typename T>
struct Prediction {
  std::vector<int> labels;
  Tensor<T> logits;
};

// Eval-mode forward; ties in the argmax resolve to the smallest class index.
template <typename T>
Prediction<T> predict_batch(Classifier<T>& model, const Tensor<T>& images);

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits);

}  // namespace pushpull
