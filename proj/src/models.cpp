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

#include "pushpull/models.hpp"

#include <algorithm>

#include "pushpull/random.hpp"

namespace pushpull {

namespace {

struct StageLayout {
  std::vector<std::size_t> widths;
  std::vector<std::size_t> blocks;
};

StageLayout layout_for(const std::string& name) {
  if (name == "resnet8") return {{16, 32, 64}, {1, 1, 1}};
  if (name == "resnet14") return {{16, 32, 64}, {2, 2, 2}};
  if (name == "resnet18-cifar") return {{64, 128, 256, 512}, {2, 2, 2, 2}};
  throw ConfigError("unknown architecture '" + name + "'");
}

template <typename T>
Conv2dLayer<T> make_conv(const std::string& name, std::size_t in, std::size_t out,
                         std::size_t k, std::size_t stride, std::size_t padding, Rng& rng) {
  Conv2dLayer<T> c;
  c.weight = Parameter<T>(name + ".weight", fan_in_uniform<T>({out, in, k, k}, in * k * k, rng));
  c.geometry = {stride, padding};
  return c;
}

template <typename T>
BatchNormLayer<T> make_bn(const std::string& name, std::size_t channels) {
  BatchNormLayer<T> b;
  b.gamma = Parameter<T>(name + ".gamma", Tensor<T>({channels}, T{1}));
  b.beta = Parameter<T>(name + ".beta", Tensor<T>({channels}));
  b.state = BatchNormState<T>(channels);
  return b;
}

template <typename T>
void append_parameter_state(std::vector<StateEntry<T>>& out, Parameter<T>& p) {
  out.push_back({p.name, &p.value});
  out.push_back({p.name + ".momentum", &p.momentum});
}

template <typename T>
void append_bn_state(std::vector<StateEntry<T>>& out, BatchNormLayer<T>& bn) {
  append_parameter_state(out, bn.gamma);
  append_parameter_state(out, bn.beta);
  const std::string base = bn.gamma.name.substr(0, bn.gamma.name.rfind('.'));
  out.push_back({base + ".running_mean", &bn.state.running_mean});
  out.push_back({base + ".running_var", &bn.state.running_var});
}

}  // namespace

std::string to_string(StemKind kind) {
  return kind == StemKind::kConv ? "conv" : "pushpull";
}

StemKind parse_stem_kind(const std::string& text) {
  if (text == "conv") return StemKind::kConv;
  if (text == "pushpull") return StemKind::kPushPull;
  throw ConfigError("unknown stem kind '" + text + "' (expected conv or pushpull)");
}

std::vector<std::string> known_architectures() {
  return {"resnet8", "resnet14", "resnet18-cifar"};
}

void ArchSpec::validate() const {
  layout_for(name);
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (stem_filters != 64 || stem_kernel != 3 || stem_stride != 1) {
    throw ConfigError("CIFAR variants use a 64-filter 3x3 stride-1 stem");
  }
  if (stem_kind == StemKind::kPushPull) stem_pushpull_config().validate();
}

PushPullConfig ArchSpec::stem_pushpull_config() const {
  PushPullConfig c = pushpull;
  c.in_channels = 3;
  c.out_channels = stem_filters;
  c.kernel_size = stem_kernel;
  c.stride = stem_stride;
  c.padding = stem_kernel / 2;
  return c;
}

template <typename T>
Var Conv2dLayer<T>::forward(Tape<T>& tape, Var x) {
  Var y = conv2d(tape, x, tape.parameter(weight), geometry);
  if (bias) y = add_channel_bias(tape, y, tape.parameter(*bias));
  return y;
}

template <typename T>
Var BatchNormLayer<T>::forward(Tape<T>& tape, Var x, bool training) {
  BatchNormOptions options;
  options.training = training;
  return batchnorm2d(tape, x, tape.parameter(gamma), tape.parameter(beta), state, options);
}

template <typename T>
Classifier<T>::Classifier(ArchSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  const StageLayout layout = layout_for(spec_.name);
  Rng rng(seed);
  const std::size_t stem_out = spec_.stem_filters;
  ConvStem stem = make_conv<T>("stem", 3, stem_out, spec_.stem_kernel, spec_.stem_stride,
                               spec_.stem_kernel / 2, rng);
  stem_bn_ = make_bn<T>("stem_bn", stem_out);
  std::size_t in = stem_out;
  for (std::size_t s = 0; s < layout.widths.size(); ++s) {
    for (std::size_t b = 0; b < layout.blocks[s]; ++b) {
      const std::size_t out = layout.widths[s];
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      const std::string base = "blocks." + std::to_string(blocks_.size());
      BasicBlock<T> block;
      block.conv1 = make_conv<T>(base + ".conv1", in, out, 3, stride, 1, rng);
      block.bn1 = make_bn<T>(base + ".bn1", out);
      block.conv2 = make_conv<T>(base + ".conv2", out, out, 3, 1, 1, rng);
      block.bn2 = make_bn<T>(base + ".bn2", out);
      if (stride != 1 || in != out) {
        block.shortcut = make_conv<T>(base + ".shortcut", in, out, 1, stride, 0, rng);
        block.shortcut_bn = make_bn<T>(base + ".shortcut_bn", out);
      }
      blocks_.push_back(std::move(block));
      in = out;
    }
  }
  head_.weight = Parameter<T>("head.weight",
                              fan_in_uniform<T>({spec_.num_classes, in}, in, rng));
  head_.bias = Parameter<T>("head.bias", Tensor<T>({spec_.num_classes}));
  stem_ = std::move(stem);
  if (spec_.stem_kind == StemKind::kPushPull) {
    const PushPullConfig config = spec_.stem_pushpull_config();
    ConvStem& conv = std::get<ConvStem>(stem_);
    PushPullConfig c = config;
    c.use_bias = conv.bias.has_value();
    spec_.pushpull = c;
    stem_ = PushPullStem(c, conv.weight.value);
  }
}

template <typename T>
Var Classifier<T>::forward(Tape<T>& tape, const Tensor<T>& images, bool training) {
  require_rank(images, 4, "classifier input");
  if (images.dim(1) != 3) {
    throw DimensionError("classifier expects 3-channel images, got " +
                         shape_string(images.shape()));
  }
  Tensor<T> x = images;
  const std::size_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const T mean = static_cast<T>(input_norm_.mean[c]);
      const T inv = static_cast<T>(1.0 / input_norm_.stddev[c]);
      T* p = x.data().data() + (i * 3 + c) * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] = (p[j] - mean) * inv;
    }
  Var h = tape.constant(std::move(x));
  if (auto* conv = std::get_if<ConvStem>(&stem_)) {
    h = conv->forward(tape, h);
  } else {
    h = std::get<PushPullStem>(stem_).forward(tape, h);
  }
  h = relu(tape, stem_bn_.forward(tape, h, training));
  for (BasicBlock<T>& block : blocks_) {
    Var y = relu(tape, block.bn1.forward(tape, block.conv1.forward(tape, h), training));
    y = block.bn2.forward(tape, block.conv2.forward(tape, y), training);
    Var skip = h;
    if (block.shortcut) {
      skip = block.shortcut_bn->forward(tape, block.shortcut->forward(tape, h), training);
    }
    h = relu(tape, add(tape, y, skip));
  }
  h = global_avgpool(tape, h);
  return linear(tape, h, tape.parameter(head_.weight), tape.parameter(head_.bias));
}

template <typename T>
std::vector<Parameter<T>*> Classifier<T>::parameters() {
  std::vector<Parameter<T>*> out;
  if (auto* conv = std::get_if<ConvStem>(&stem_)) {
    out.push_back(&conv->weight);
    if (conv->bias) out.push_back(&*conv->bias);
  } else {
    for (Parameter<T>* p : std::get<PushPullStem>(stem_).parameters()) out.push_back(p);
  }
  auto add_bn = [&out](BatchNormLayer<T>& bn) {
    out.push_back(&bn.gamma);
    out.push_back(&bn.beta);
  };
  add_bn(stem_bn_);
  for (BasicBlock<T>& b : blocks_) {
    out.push_back(&b.conv1.weight);
    add_bn(b.bn1);
    out.push_back(&b.conv2.weight);
    add_bn(b.bn2);
    if (b.shortcut) {
      out.push_back(&b.shortcut->weight);
      add_bn(*b.shortcut_bn);
    }
  }
  out.push_back(&head_.weight);
  out.push_back(&head_.bias);
  return out;
}

template <typename T>
std::size_t Classifier<T>::parameter_count() {
  std::size_t total = 0;
  for (const Parameter<T>* p : parameters()) total += p->value.size();
  return total;
}

template <typename T>
void Classifier<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->zero_grad();
}

template <typename T>
std::vector<StateEntry<T>> Classifier<T>::state() {
  std::vector<StateEntry<T>> out;
  if (auto* conv = std::get_if<ConvStem>(&stem_)) {
    append_parameter_state(out, conv->weight);
    if (conv->bias) append_parameter_state(out, *conv->bias);
  } else {
    PushPullStem& pp = std::get<PushPullStem>(stem_);
    append_parameter_state(out, pp.push_weights());
    // A fixed alpha is still persisted so the checkpoint is self-describing.
    append_parameter_state(out, pp.alpha());
    if (pp.bias()) append_parameter_state(out, *pp.bias());
  }
  append_bn_state(out, stem_bn_);
  for (BasicBlock<T>& b : blocks_) {
    append_parameter_state(out, b.conv1.weight);
    append_bn_state(out, b.bn1);
    append_parameter_state(out, b.conv2.weight);
    append_bn_state(out, b.bn2);
    if (b.shortcut) {
      append_parameter_state(out, b.shortcut->weight);
      append_bn_state(out, *b.shortcut_bn);
    }
  }
  append_parameter_state(out, head_.weight);
  append_parameter_state(out, head_.bias);
  return out;
}

template <typename T>
Classifier<T> replace_stem(Classifier<T> model, const PushPullConfig& config) {
  auto* conv = std::get_if<typename Classifier<T>::ConvStem>(&model.stem_);
  if (conv == nullptr) throw ConfigError("replace_stem: stem is not a plain convolution");
  const Tensor<T>& w = conv->weight.value;
  if (config.in_channels != w.dim(1) || config.out_channels != w.dim(0) ||
      config.kernel_size != w.dim(2) || config.kernel_size != w.dim(3) ||
      config.stride != conv->geometry.stride || config.padding != conv->geometry.padding) {
    throw ConfigError("replace_stem: PushPull geometry does not match the stem convolution " +
                      shape_string(w.shape()));
  }
  PushPullConfig c = config;
  c.use_bias = conv->bias.has_value();
  typename Classifier<T>::PushPullStem stem(c, w);
  if (conv->bias) stem.bias()->value = conv->bias->value;
  model.stem_ = std::move(stem);
  model.spec_.stem_kind = StemKind::kPushPull;
  model.spec_.pushpull = c;
  return model;
}

template <typename T>
std::vector<int> argmax_rows(const Tensor<T>& logits) {
  require_rank(logits, 2, "argmax logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (logits[i * k + j] > logits[i * k + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

template <typename T>
Prediction<T> predict_batch(Classifier<T>& model, const Tensor<T>& images) {
  Tape<T> tape;
  const Var logits = model.forward(tape, images, false);
  Prediction<T> p;
  p.logits = tape.value(logits);
  p.labels = argmax_rows(p.logits);
  return p;
}

#define PUSHPULL_INSTANTIATE(T)                                                    \
  template struct Conv2dLayer<T>;                                                  \
  template struct BatchNormLayer<T>;                                               \
  template class Classifier<T>;                                                    \
  template Classifier<T> replace_stem(Classifier<T>, const PushPullConfig&);       \
  template std::vector<int> argmax_rows(const Tensor<T>&);                         \
  template Prediction<T> predict_batch(Classifier<T>&, const Tensor<T>&);

PUSHPULL_INSTANTIATE(float)
PUSHPULL_INSTANTIATE(double)

#undef PUSHPULL_INSTANTIATE

}  // namespace pushpull
