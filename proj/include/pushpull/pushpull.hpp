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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pushpull/autodiff.hpp"
#include "pushpull/tensor.hpp"

namespace pushpull {

struct AlphaMode {
  enum class Kind { kTrainable, kFixed };
  Kind kind = Kind::kTrainable;
  // Initial value when trainable, constant value when fixed.
  double value = 1.0;

  static AlphaMode trainable(double init = 1.0) { return {Kind::kTrainable, init}; }
  static AlphaMode fixed(double v) { return {Kind::kFixed, v}; }
  bool is_trainable() const { return kind == Kind::kTrainable; }
};

struct PushPullConfig {
  std::size_t in_channels = 3;
  std::size_t out_channels = 64;
  std::size_t kernel_size = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  // Side of the uniform average filter applied to the pull response; 0 = none.
  std::size_t avg_size = 0;
  AlphaMode alpha;
  // Treat the per-filter extrema as constants during backward.
  bool detach_extrema = false;
  bool use_bias = true;

  // Throws ConfigError on even avg_size or negative alpha.
  void validate() const;
  ConvGeometry geometry() const { return {stride, padding}; }
};

// Contrast-complementary kernel, per output filter o:
//   pull[o] = -w[o] + max(w[o]) + min(w[o])
// Extrema are taken over all input channels and spatial taps of the filter.
template <typename T>
Tensor<T> derive_pull_kernel(const Tensor<T>& w);

// The same map computed through explicit normalization to [0,1], complement
// and rescaling. Undefined for constant filters (returns them unchanged).
template <typename T>
Tensor<T> derive_pull_kernel_rescaled(const Tensor<T>& w);

// Differentiable pull-kernel derivation. The extrema receive the summed
// gradient at their first row-major arg-extremum unless detach_extrema.
template <typename T>
Var pull_kernel(Tape<T>& tape, Var w, bool detach_extrema = false);

// y = relu(x*w) - alpha (.) relu(avg(x*pull(w))) + b, fused into one tape node.
// `bias` may be an invalid Var when the unit has no bias.
template <typename T>
Var pushpull_unit(Tape<T>& tape, Var x, Var w, Var alpha, Var bias,
                  const PushPullConfig& config);

// Tape-free evaluation. With rectify = false both ReLUs are dropped, giving
// the linear-mode response x*w - alpha (.) avg(x*pull(w)) + b.
template <typename T>
Tensor<T> pushpull_response(const Tensor<T>& x, const Tensor<T>& w,
                            std::span<const T> alpha, std::span<const T> bias,
                            const PushPullConfig& config, bool rectify = true);

// Single kernel f = w - alpha (.) (pull(w) conv box) such that the linear-mode
// unit equals x*f (+ b) away from the border band of the average filter.
// With avg_size a > 1 the support grows by a - 1 and w is zero-extended
// symmetrically; convolve with padding + (a - 1) / 2 to align with w.
template <typename T>
Tensor<T> effective_linear_kernel(const Tensor<T>& w, std::span<const T> alpha,
                                  std::size_t avg_size);

template <typename T>
class PushPullLayer {
 public:
  // Fan-in scaled uniform initialization of the push kernel.
  PushPullLayer(PushPullConfig config, std::uint64_t seed);
  PushPullLayer(PushPullConfig config, Tensor<T> push_weights);

  const PushPullConfig& config() const { return config_; }
  Parameter<T>& push_weights() { return push_weights_; }
  const Parameter<T>& push_weights() const { return push_weights_; }
  Parameter<T>& alpha() { return alpha_; }
  const Parameter<T>& alpha() const { return alpha_; }
  Parameter<T>* bias() { return bias_ ? &*bias_ : nullptr; }
  const Parameter<T>* bias() const { return bias_ ? &*bias_ : nullptr; }

  // Trainable parameters only; a fixed alpha is not included.
  std::vector<Parameter<T>*> parameters();

  Tensor<T> pull_weights() const { return derive_pull_kernel(push_weights_.value); }

  Var forward(Tape<T>& tape, Var x);

  // Indices of negative inhibition strengths; these are flagged in reports.
  std::vector<std::size_t> negative_alpha_filters() const;

 private:
  void init_alpha_and_bias();

  PushPullConfig config_;
  Parameter<T> push_weights_;
  Parameter<T> alpha_;
  std::optional<Parameter<T>> bias_;
};

}  // namespace pushpull
