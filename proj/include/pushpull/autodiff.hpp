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
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "pushpull/kernels.hpp"
#include "pushpull/tensor.hpp"

namespace pushpull {

using kernels::ConvGeometry;

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the recorded
// sequence is already topologically sorted; backward walks it once in reverse.
template <typename T>
class Tape {
 public:
  // Receives the gradient of the loss w.r.t. this node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>&)>;

  Var constant(Tensor<T> value);

  // Leaf bound to a Parameter; backward adds its gradient into param.grad.
  Var parameter(Parameter<T>& param);

  // Records an op output. The node requires grad iff any input does; the
  // backward function is dropped otherwise.
  Var record(Tensor<T> value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor<T>& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }

  // Gradient of the last backward pass, or null if v was not reached.
  const Tensor<T>* grad(Var v) const;

  // Accumulates into v's gradient buffer; no-op when v does not require grad.
  void accumulate(Var v, const Tensor<T>& g);

  // Gradient buffer of v, allocated and zeroed on first use. Only valid for
  // nodes that require grad.
  Tensor<T>& grad_buffer(Var v);

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    BackwardFn backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
void backward(Var loss, Tape<T>& tape) {
  tape.backward(loss);
}

// --- primitives -------------------------------------------------------------

// Cross-correlation, no bias. Rejects non-finite input or kernel values.
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var kernel, ConvGeometry geometry);

// Adds b[c] to every element of channel c (rank-4 NCHW or rank-2 NC input).
template <typename T>
Var add_channel_bias(Tape<T>& tape, Var x, Var bias);

// Multiplies channel c by alpha[c] (rank-4 NCHW).
template <typename T>
Var scale_channels(Tape<T>& tape, Var x, Var alpha);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var avgpool2d(Tape<T>& tape, Var x, std::size_t window, ConvGeometry geometry);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b);

template <typename T>
Var sum(Tape<T>& tape, Var x);

// sum_i x[i] * weights[i]; a random projection gives a generic scalar loss.
template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const Tensor<T>& weights);

template <typename T>
struct BatchNormState {
  explicit BatchNormState(std::size_t channels = 0)
      : running_mean({channels}, T{0}), running_var({channels}, T{1}) {}
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

struct BatchNormOptions {
  bool training = false;
  double momentum = 0.1;
  double eps = 1e-5;
};

// Training mode normalizes with batch statistics and updates the running
// statistics (unbiased variance); eval mode uses the running statistics.
template <typename T>
Var batchnorm2d(Tape<T>& tape, Var x, Var gamma, Var beta, BatchNormState<T>& state,
                BatchNormOptions options);

// x: N x F, weight: K x F, bias: K.
template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias);

// N x C x H x W -> N x C
template <typename T>
Var global_avgpool(Tape<T>& tape, Var x);

// Mean over the batch of -log softmax(logits)[label], max-subtracted.
template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels);

}  // namespace pushpull
