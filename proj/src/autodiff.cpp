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

#include "pushpull/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pushpull {

// --- Tape -------------------------------------------------------------------

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

template <typename T>
typename Tape<T>::Node& Tape<T>::node(Var v) {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& param) {
  Node n;
  n.value = param.value;
  n.requires_grad = true;
  n.param = &param;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs,
                    BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](Var v) { return node(v).requires_grad; });
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>* Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  return n.has_grad ? &n.grad : nullptr;
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) throw ContractError("gradient requested for a constant");
  if (!n.has_grad) {
    n.grad = Tensor<T>(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
void Tape<T>::accumulate(Var v, const Tensor<T>& g) {
  if (!node(v).requires_grad) return;
  Tensor<T>& buf = grad_buffer(v);
  if (buf.shape() != g.shape()) {
    throw DimensionError("gradient shape " + shape_string(g.shape()) +
                         " does not match value shape " + shape_string(buf.shape()));
  }
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (consumed_) throw ContractError("backward already ran on this tape");
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(root.value.shape()));
  }
  consumed_ = true;
  if (!root.requires_grad) return;
  grad_buffer(loss).fill(T{1});
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param != nullptr) {
      auto dst = n.param->grad.data();
      auto src = n.grad.data();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

// --- primitives -------------------------------------------------------------

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var kernel, ConvGeometry geometry) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& kv = tape.value(kernel);
  xv.require_finite("conv2d input");
  kv.require_finite("conv2d kernel");
  Tensor<T> y = kernels::conv2d_forward(xv, kv, geometry);
  return tape.record(std::move(y), {x, kernel},
                     [x, kernel, geometry](Tape<T>& t, const Tensor<T>& gy) {
                       const bool need_x = t.requires_grad(x);
                       const bool need_k = t.requires_grad(kernel);
                       Tensor<T>* dx = need_x ? &t.grad_buffer(x) : nullptr;
                       Tensor<T>* dk = need_k ? &t.grad_buffer(kernel) : nullptr;
                       kernels::conv2d_backward(t.value(x), t.value(kernel), gy, geometry,
                                                dx, dk);
                     });
}

namespace {

template <typename T>
std::size_t channel_stride(const Tensor<T>& x, std::size_t channels, const char* what) {
  if (x.rank() == 4) {
    if (x.dim(1) != channels) {
      throw DimensionError(std::string(what) + ": " + std::to_string(channels) +
                           " per-channel values for input " + shape_string(x.shape()));
    }
    return x.dim(2) * x.dim(3);
  }
  if (x.rank() == 2) {
    if (x.dim(1) != channels) {
      throw DimensionError(std::string(what) + ": " + std::to_string(channels) +
                           " per-channel values for input " + shape_string(x.shape()));
    }
    return 1;
  }
  throw DimensionError(std::string(what) + ": expected rank 2 or 4 input");
}

}  // namespace

template <typename T>
Var add_channel_bias(Tape<T>& tape, Var x, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& bv = tape.value(bias);
  const std::size_t c = bv.size();
  const std::size_t plane = channel_stride(xv, c, "add_channel_bias");
  const std::size_t n = xv.dim(0);
  Tensor<T> y = xv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* p = y.data().data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] += bv[ch];
    }
  return tape.record(std::move(y), {x, bias},
                     [x, bias, n, c, plane](Tape<T>& t, const Tensor<T>& gy) {
                       t.accumulate(x, gy);
                       if (!t.requires_grad(bias)) return;
                       Tensor<T>& gb = t.grad_buffer(bias);
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           const T* p = gy.data().data() + (i * c + ch) * plane;
                           T acc{0};
                           for (std::size_t j = 0; j < plane; ++j) acc += p[j];
                           gb[ch] += acc;
                         }
                     });
}

template <typename T>
Var scale_channels(Tape<T>& tape, Var x, Var alpha) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& av = tape.value(alpha);
  const std::size_t c = av.size();
  const std::size_t plane = channel_stride(xv, c, "scale_channels");
  const std::size_t n = xv.dim(0);
  Tensor<T> y = xv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      T* p = y.data().data() + (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) p[j] *= av[ch];
    }
  return tape.record(
      std::move(y), {x, alpha}, [x, alpha, n, c, plane](Tape<T>& t, const Tensor<T>& gy) {
        const Tensor<T>& xv2 = t.value(x);
        const Tensor<T>& av2 = t.value(alpha);
        if (t.requires_grad(x)) {
          Tensor<T>& gx = t.grad_buffer(x);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (i * c + ch) * plane;
              for (std::size_t j = 0; j < plane; ++j) gx[off + j] += gy[off + j] * av2[ch];
            }
        }
        if (t.requires_grad(alpha)) {
          Tensor<T>& ga = t.grad_buffer(alpha);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (i * c + ch) * plane;
              T acc{0};
              for (std::size_t j = 0; j < plane; ++j) acc += gy[off + j] * xv2[off + j];
              ga[ch] += acc;
            }
        }
      });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  Tensor<T> y = tape.value(x);
  for (T& v : y.data()) v = v > T{0} ? v : T{0};
  return tape.record(std::move(y), {x}, [x](Tape<T>& t, const Tensor<T>& gy) {
    const Tensor<T>& xv = t.value(x);
    Tensor<T>& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > T{0}) gx[i] += gy[i];
  });
}

template <typename T>
Var avgpool2d(Tape<T>& tape, Var x, std::size_t window, ConvGeometry geometry) {
  Tensor<T> y = kernels::avgpool2d_forward(tape.value(x), window, geometry);
  return tape.record(std::move(y), {x},
                     [x, window, geometry](Tape<T>& t, const Tensor<T>& gy) {
                       kernels::avgpool2d_backward(gy, window, geometry, t.grad_buffer(x));
                     });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError("add: shapes " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  Tensor<T> y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& gy) {
    t.accumulate(a, gy);
    t.accumulate(b, gy);
  });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  if (av.shape() != bv.shape()) {
    throw DimensionError("sub: shapes " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  Tensor<T> y = av;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return tape.record(std::move(y), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& gy) {
    t.accumulate(a, gy);
    if (!t.requires_grad(b)) return;
    Tensor<T>& gb = t.grad_buffer(b);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  T acc{0};
  for (T v : tape.value(x).data()) acc += v;
  return tape.record(Tensor<T>({1}, acc), {x}, [x](Tape<T>& t, const Tensor<T>& gy) {
    Tensor<T>& gx = t.grad_buffer(x);
    for (T& v : gx.data()) v += gy[0];
  });
}

template <typename T>
Var weighted_sum(Tape<T>& tape, Var x, const Tensor<T>& weights) {
  const Tensor<T>& xv = tape.value(x);
  if (xv.shape() != weights.shape()) {
    throw DimensionError("weighted_sum: weights " + shape_string(weights.shape()) +
                         " for value " + shape_string(xv.shape()));
  }
  T acc{0};
  for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i] * weights[i];
  return tape.record(Tensor<T>({1}, acc), {x},
                     [x, weights](Tape<T>& t, const Tensor<T>& gy) {
                       Tensor<T>& gx = t.grad_buffer(x);
                       for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0] * weights[i];
                     });
}

template <typename T>
Var batchnorm2d(Tape<T>& tape, Var x, Var gamma, Var beta, BatchNormState<T>& state,
                BatchNormOptions options) {
  const Tensor<T>& xv = tape.value(x);
  require_rank(xv, 4, "batchnorm2d input");
  const std::size_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  const Tensor<T>& gv = tape.value(gamma);
  const Tensor<T>& bv = tape.value(beta);
  if (gv.size() != c || bv.size() != c || state.running_mean.size() != c ||
      state.running_var.size() != c) {
    throw DimensionError("batchnorm2d: per-channel parameters must have length " +
                         std::to_string(c));
  }
  const std::size_t count = n * plane;
  const T eps = static_cast<T>(options.eps);
  std::vector<T> mean(c), inv_std(c);
  if (options.training) {
    if (count < 2) throw DimensionError("batchnorm2d: training needs more than one value per channel");
    const T momentum = static_cast<T>(options.momentum);
    for (std::size_t ch = 0; ch < c; ++ch) {
      T s{0};
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = xv.data().data() + (i * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) s += p[j];
      }
      const T m = s / static_cast<T>(count);
      T ss{0};
      for (std::size_t i = 0; i < n; ++i) {
        const T* p = xv.data().data() + (i * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) ss += (p[j] - m) * (p[j] - m);
      }
      const T var = ss / static_cast<T>(count);
      mean[ch] = m;
      inv_std[ch] = T{1} / std::sqrt(var + eps);
      const T unbiased = ss / static_cast<T>(count - 1);
      state.running_mean[ch] = (T{1} - momentum) * state.running_mean[ch] + momentum * m;
      state.running_var[ch] = (T{1} - momentum) * state.running_var[ch] + momentum * unbiased;
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = state.running_mean[ch];
      inv_std[ch] = T{1} / std::sqrt(state.running_var[ch] + eps);
    }
  }
  Tensor<T> xhat(xv.shape());
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * plane;
      for (std::size_t j = 0; j < plane; ++j) {
        const T h = (xv[off + j] - mean[ch]) * inv_std[ch];
        xhat[off + j] = h;
        y[off + j] = gv[ch] * h + bv[ch];
      }
    }
  const bool training = options.training;
  return tape.record(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, plane,
       count, training](Tape<T>& t, const Tensor<T>& gy) {
        const Tensor<T>& gv2 = t.value(gamma);
        std::vector<T> sum_gy(c, T{0}), sum_gy_xhat(c, T{0});
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t off = (i * c + ch) * plane;
            for (std::size_t j = 0; j < plane; ++j) {
              sum_gy[ch] += gy[off + j];
              sum_gy_xhat[ch] += gy[off + j] * xhat[off + j];
            }
          }
        if (t.requires_grad(gamma)) {
          Tensor<T>& gg = t.grad_buffer(gamma);
          for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += sum_gy_xhat[ch];
        }
        if (t.requires_grad(beta)) {
          Tensor<T>& gb = t.grad_buffer(beta);
          for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += sum_gy[ch];
        }
        if (!t.requires_grad(x)) return;
        Tensor<T>& gx = t.grad_buffer(x);
        const T inv_count = T{1} / static_cast<T>(count);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t off = (i * c + ch) * plane;
            const T scale = gv2[ch] * inv_std[ch];
            if (training) {
              const T mg = sum_gy[ch] * inv_count;
              const T mgx = sum_gy_xhat[ch] * inv_count;
              for (std::size_t j = 0; j < plane; ++j)
                gx[off + j] += scale * (gy[off + j] - mg - xhat[off + j] * mgx);
            } else {
              for (std::size_t j = 0; j < plane; ++j) gx[off + j] += scale * gy[off + j];
            }
          }
      });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(weight);
  const Tensor<T>& bv = tape.value(bias);
  require_rank(xv, 2, "linear input");
  require_rank(wv, 2, "linear weight");
  const std::size_t n = xv.dim(0), f = xv.dim(1), k = wv.dim(0);
  if (wv.dim(1) != f || bv.size() != k) {
    throw DimensionError("linear: weight " + shape_string(wv.shape()) + " / bias " +
                         shape_string(bv.shape()) + " for input " +
                         shape_string(xv.shape()));
  }
  Tensor<T> y({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < k; ++o) {
      T acc = bv[o];
      for (std::size_t j = 0; j < f; ++j) acc += xv[i * f + j] * wv[o * f + j];
      y[i * k + o] = acc;
    }
  return tape.record(std::move(y), {x, weight, bias},
                     [x, weight, bias, n, f, k](Tape<T>& t, const Tensor<T>& gy) {
                       const Tensor<T>& xv2 = t.value(x);
                       const Tensor<T>& wv2 = t.value(weight);
                       if (t.requires_grad(x)) {
                         Tensor<T>& gx = t.grad_buffer(x);
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t o = 0; o < k; ++o) {
                             const T g = gy[i * k + o];
                             for (std::size_t j = 0; j < f; ++j) gx[i * f + j] += g * wv2[o * f + j];
                           }
                       }
                       if (t.requires_grad(weight)) {
                         Tensor<T>& gw = t.grad_buffer(weight);
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t o = 0; o < k; ++o) {
                             const T g = gy[i * k + o];
                             for (std::size_t j = 0; j < f; ++j) gw[o * f + j] += g * xv2[i * f + j];
                           }
                       }
                       if (t.requires_grad(bias)) {
                         Tensor<T>& gb = t.grad_buffer(bias);
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t o = 0; o < k; ++o) gb[o] += gy[i * k + o];
                       }
                     });
}

template <typename T>
Var global_avgpool(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  require_rank(xv, 4, "global_avgpool input");
  const std::size_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor<T> y({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    T acc{0};
    for (std::size_t j = 0; j < plane; ++j) acc += xv[i * plane + j];
    y[i] = acc / static_cast<T>(plane);
  }
  return tape.record(std::move(y), {x}, [x, n, c, plane](Tape<T>& t, const Tensor<T>& gy) {
    Tensor<T>& gx = t.grad_buffer(x);
    const T inv = T{1} / static_cast<T>(plane);
    for (std::size_t i = 0; i < n * c; ++i) {
      const T g = gy[i] * inv;
      for (std::size_t j = 0; j < plane; ++j) gx[i * plane + j] += g;
    }
  });
}

template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::span<const int> labels) {
  const Tensor<T>& lv = tape.value(logits);
  require_rank(lv, 2, "softmax_cross_entropy logits");
  const std::size_t n = lv.dim(0), k = lv.dim(1);
  if (labels.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " samples");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw RangeError("softmax_cross_entropy: label " + std::to_string(label) +
                       " outside [0, " + std::to_string(k) + ")");
    }
  }
  Tensor<T> probs({n, k});
  T loss{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = lv.data().data() + i * k;
    const T m = *std::max_element(row, row + k);
    T z{0};
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const T log_z = std::log(z);
    for (std::size_t j = 0; j < k; ++j) probs[i * k + j] = std::exp(row[j] - m - log_z);
    loss += log_z - (row[static_cast<std::size_t>(labels[i])] - m);
  }
  loss /= static_cast<T>(n);
  std::vector<int> label_copy(labels.begin(), labels.end());
  return tape.record(Tensor<T>({1}, loss), {logits},
                     [logits, probs = std::move(probs), labels = std::move(label_copy), n,
                      k](Tape<T>& t, const Tensor<T>& gy) {
                       Tensor<T>& gl = t.grad_buffer(logits);
                       const T scale = gy[0] / static_cast<T>(n);
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < k; ++j) {
                           const T target =
                               static_cast<std::size_t>(labels[i]) == j ? T{1} : T{0};
                           gl[i * k + j] += scale * (probs[i * k + j] - target);
                         }
                     });
}

#define PUSHPULL_INSTANTIATE(T)                                                            \
  template class Tape<T>;                                                                  \
  template Var conv2d(Tape<T>&, Var, Var, ConvGeometry);                                   \
  template Var add_channel_bias(Tape<T>&, Var, Var);                                       \
  template Var scale_channels(Tape<T>&, Var, Var);                                         \
  template Var relu(Tape<T>&, Var);                                                        \
  template Var avgpool2d(Tape<T>&, Var, std::size_t, ConvGeometry);                        \
  template Var add(Tape<T>&, Var, Var);                                                    \
  template Var sub(Tape<T>&, Var, Var);                                                    \
  template Var sum(Tape<T>&, Var);                                                         \
  template Var weighted_sum(Tape<T>&, Var, const Tensor<T>&);                              \
  template Var batchnorm2d(Tape<T>&, Var, Var, Var, BatchNormState<T>&, BatchNormOptions); \
  template Var linear(Tape<T>&, Var, Var, Var);                                            \
  template Var global_avgpool(Tape<T>&, Var);                                              \
  template Var softmax_cross_entropy(Tape<T>&, Var, std::span<const int>);

PUSHPULL_INSTANTIATE(float)
PUSHPULL_INSTANTIATE(double)

#undef PUSHPULL_INSTANTIATE

}  // namespace pushpull
