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

#include "pushpull/pushpull.hpp"

#include <algorithm>
#include <string>

#include "pushpull/kernels.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

void PushPullConfig::validate() const {
  if (avg_size != 0 && avg_size % 2 == 0) {
    throw ConfigError("pushpull: avg_size must be 0 (none) or odd, got " +
                      std::to_string(avg_size));
  }
  if (alpha.value < 0.0) {
    throw ConfigError(std::string("pushpull: ") +
                      (alpha.is_trainable() ? "trainable alpha init" : "fixed alpha") +
                      " must be non-negative");
  }
  if (in_channels == 0 || out_channels == 0 || kernel_size == 0 || stride == 0) {
    throw ConfigError("pushpull: channels, kernel size and stride must be positive");
  }
}

namespace {

struct Extrema {
  std::size_t argmax = 0;
  std::size_t argmin = 0;
};

// First row-major arg-extrema of each output filter.
template <typename T>
std::vector<Extrema> filter_extrema(const Tensor<T>& w) {
  require_rank(w, 4, "pull kernel");
  const std::size_t o_n = w.dim(0);
  const std::size_t k_n = w.dim(1) * w.dim(2) * w.dim(3);
  std::vector<Extrema> out(o_n);
  for (std::size_t o = 0; o < o_n; ++o) {
    const T* f = w.data().data() + o * k_n;
    Extrema e;
    for (std::size_t k = 1; k < k_n; ++k) {
      if (f[k] > f[e.argmax]) e.argmax = k;
      if (f[k] < f[e.argmin]) e.argmin = k;
    }
    out[o] = e;
  }
  return out;
}

template <typename T>
Tensor<T> pull_from_extrema(const Tensor<T>& w, const std::vector<Extrema>& ext) {
  const std::size_t k_n = w.dim(1) * w.dim(2) * w.dim(3);
  Tensor<T> pull(w.shape());
  for (std::size_t o = 0; o < ext.size(); ++o) {
    const T* f = w.data().data() + o * k_n;
    T* p = pull.data().data() + o * k_n;
    const T shift = f[ext[o].argmax] + f[ext[o].argmin];
    for (std::size_t k = 0; k < k_n; ++k) p[k] = -f[k] + shift;
  }
  return pull;
}

// Backward of pull = -w + max + min, accumulated into gw.
template <typename T>
void pull_backward(const Tensor<T>& g_pull, const std::vector<Extrema>& ext,
                   bool detach_extrema, Tensor<T>& gw) {
  const std::size_t k_n = g_pull.size() / ext.size();
  for (std::size_t o = 0; o < ext.size(); ++o) {
    const T* g = g_pull.data().data() + o * k_n;
    T* dst = gw.data().data() + o * k_n;
    T total{0};
    for (std::size_t k = 0; k < k_n; ++k) {
      dst[k] -= g[k];
      total += g[k];
    }
    if (!detach_extrema) {
      dst[ext[o].argmax] += total;
      dst[ext[o].argmin] += total;
    }
  }
}

ConvGeometry average_geometry(std::size_t avg_size) {
  return ConvGeometry{1, (avg_size - 1) / 2};
}

}  // namespace

template <typename T>
Tensor<T> derive_pull_kernel(const Tensor<T>& w) {
  return pull_from_extrema(w, filter_extrema(w));
}

template <typename T>
Tensor<T> derive_pull_kernel_rescaled(const Tensor<T>& w) {
  const auto ext = filter_extrema(w);
  const std::size_t k_n = w.dim(1) * w.dim(2) * w.dim(3);
  Tensor<T> pull(w.shape());
  for (std::size_t o = 0; o < ext.size(); ++o) {
    const T* f = w.data().data() + o * k_n;
    T* p = pull.data().data() + o * k_n;
    const T hi = f[ext[o].argmax];
    const T lo = f[ext[o].argmin];
    const T range = hi - lo;
    for (std::size_t k = 0; k < k_n; ++k) {
      if (range == T{0}) {
        p[k] = f[k];
        continue;
      }
      const T complement = T{1} - (f[k] - lo) / range;
      p[k] = complement * range + lo;
    }
  }
  return pull;
}

template <typename T>
Var pull_kernel(Tape<T>& tape, Var w, bool detach_extrema) {
  const Tensor<T>& wv = tape.value(w);
  auto ext = filter_extrema(wv);
  Tensor<T> pull = pull_from_extrema(wv, ext);
  return tape.record(std::move(pull), {w},
                     [w, ext = std::move(ext), detach_extrema](Tape<T>& t,
                                                               const Tensor<T>& g) {
                       pull_backward(g, ext, detach_extrema, t.grad_buffer(w));
                     });
}

namespace {

template <typename T>
void check_unit_operands(const Tensor<T>& x, const Tensor<T>& w, std::size_t alpha_len,
                         std::size_t bias_len, const PushPullConfig& config) {
  require_rank(x, 4, "pushpull input");
  require_rank(w, 4, "pushpull push kernel");
  if (x.dim(1) != w.dim(1)) {
    throw DimensionError("pushpull: input has " + std::to_string(x.dim(1)) +
                         " channels, layer expects " + std::to_string(w.dim(1)));
  }
  if (alpha_len != w.dim(0)) {
    throw DimensionError("pushpull: alpha length " + std::to_string(alpha_len) +
                         " differs from filter count " + std::to_string(w.dim(0)));
  }
  if (bias_len != 0 && bias_len != w.dim(0)) {
    throw DimensionError("pushpull: bias length " + std::to_string(bias_len) +
                         " differs from filter count " + std::to_string(w.dim(0)));
  }
  if (config.avg_size != 0 && config.avg_size % 2 == 0) {
    throw ConfigError("pushpull: avg_size must be odd");
  }
}

}  // namespace

template <typename T>
Tensor<T> pushpull_response(const Tensor<T>& x, const Tensor<T>& w,
                            std::span<const T> alpha, std::span<const T> bias,
                            const PushPullConfig& config, bool rectify) {
  check_unit_operands(x, w, alpha.size(), bias.size(), config);
  const ConvGeometry g = config.geometry();
  Tensor<T> push = kernels::conv2d_forward(x, w, g);
  Tensor<T> pull = kernels::conv2d_forward(x, derive_pull_kernel(w), g);
  if (config.avg_size > 1) {
    pull = kernels::avgpool2d_forward(pull, config.avg_size, average_geometry(config.avg_size));
  }
  const std::size_t n = push.dim(0), c = push.dim(1), plane = push.dim(2) * push.dim(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * plane;
      const T b = bias.empty() ? T{0} : bias[ch];
      for (std::size_t j = 0; j < plane; ++j) {
        T a = push[off + j];
        T q = pull[off + j];
        if (rectify) {
          a = std::max(a, T{0});
          q = std::max(q, T{0});
        }
        push[off + j] = a - alpha[ch] * q + b;
      }
    }
  return push;
}

template <typename T>
Var pushpull_unit(Tape<T>& tape, Var x, Var w, Var alpha, Var bias,
                  const PushPullConfig& config) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(w);
  const Tensor<T>& av = tape.value(alpha);
  const bool has_bias = bias.valid();
  const std::size_t bias_len = has_bias ? tape.value(bias).size() : 0;
  check_unit_operands(xv, wv, av.size(), bias_len, config);
  xv.require_finite("pushpull input");
  wv.require_finite("pushpull push kernel");

  const ConvGeometry g = config.geometry();
  auto ext = filter_extrema(wv);
  Tensor<T> pull_w = pull_from_extrema(wv, ext);
  Tensor<T> push_pre = kernels::conv2d_forward(xv, wv, g);
  Tensor<T> pull_pre = kernels::conv2d_forward(xv, pull_w, g);
  if (config.avg_size > 1) {
    pull_pre =
        kernels::avgpool2d_forward(pull_pre, config.avg_size, average_geometry(config.avg_size));
  }
  const std::size_t n = push_pre.dim(0), c = push_pre.dim(1);
  const std::size_t plane = push_pre.dim(2) * push_pre.dim(3);
  Tensor<T> y(push_pre.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * plane;
      const T b = has_bias ? tape.value(bias)[ch] : T{0};
      for (std::size_t j = 0; j < plane; ++j) {
        y[off + j] = std::max(push_pre[off + j], T{0}) -
                     av[ch] * std::max(pull_pre[off + j], T{0}) + b;
      }
    }

  const std::size_t avg_size = config.avg_size;
  const bool detach = config.detach_extrema;
  typename Tape<T>::BackwardFn fn = [x, w, alpha, bias, has_bias, g, avg_size, detach, n, c, plane,
                            ext = std::move(ext), pull_w = std::move(pull_w),
                            push_pre = std::move(push_pre),
                            pull_pre = std::move(pull_pre)](Tape<T>& t, const Tensor<T>& gy) {
    const Tensor<T>& av2 = t.value(alpha);
    if (has_bias && t.requires_grad(bias)) {
      Tensor<T>& gb = t.grad_buffer(bias);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t off = (i * c + ch) * plane;
          T acc{0};
          for (std::size_t j = 0; j < plane; ++j) acc += gy[off + j];
          gb[ch] += acc;
        }
    }
    if (t.requires_grad(alpha)) {
      Tensor<T>& ga = t.grad_buffer(alpha);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t off = (i * c + ch) * plane;
          T acc{0};
          for (std::size_t j = 0; j < plane; ++j)
            acc += gy[off + j] * std::max(pull_pre[off + j], T{0});
          ga[ch] -= acc;
        }
    }
    const bool need_x = t.requires_grad(x);
    const bool need_w = t.requires_grad(w);
    if (!need_x && !need_w) return;

    Tensor<T> g_push(gy.shape());
    Tensor<T> g_pull(gy.shape());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t off = (i * c + ch) * plane;
        for (std::size_t j = 0; j < plane; ++j) {
          if (push_pre[off + j] > T{0}) g_push[off + j] = gy[off + j];
          if (pull_pre[off + j] > T{0}) g_pull[off + j] = -av2[ch] * gy[off + j];
        }
      }
    if (avg_size > 1) {
      Tensor<T> g_conv(g_pull.shape());
      kernels::avgpool2d_backward(g_pull, avg_size, average_geometry(avg_size), g_conv);
      g_pull = std::move(g_conv);
    }
    const Tensor<T>& xv2 = t.value(x);
    Tensor<T>* gx = need_x ? &t.grad_buffer(x) : nullptr;
    Tensor<T>* gw = need_w ? &t.grad_buffer(w) : nullptr;
    kernels::conv2d_backward(xv2, t.value(w), g_push, g, gx, gw);
    Tensor<T> g_pull_w(pull_w.shape());
    kernels::conv2d_backward(xv2, pull_w, g_pull, g, gx, need_w ? &g_pull_w : nullptr);
    if (need_w) pull_backward(g_pull_w, ext, detach, *gw);
  };
  if (has_bias) return tape.record(std::move(y), {x, w, alpha, bias}, std::move(fn));
  return tape.record(std::move(y), {x, w, alpha}, std::move(fn));
}

template <typename T>
Tensor<T> effective_linear_kernel(const Tensor<T>& w, std::span<const T> alpha,
                                  std::size_t avg_size) {
  require_rank(w, 4, "effective kernel push weights");
  const std::size_t o_n = w.dim(0), i_n = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (alpha.size() != o_n) {
    throw DimensionError("effective kernel: alpha length " + std::to_string(alpha.size()) +
                         " for " + std::to_string(o_n) + " filters");
  }
  if (avg_size != 0 && avg_size % 2 == 0) throw ConfigError("avg_size must be odd");
  const std::size_t a = avg_size > 1 ? avg_size : 1;
  const std::size_t r = (a - 1) / 2;
  const std::size_t eh = kh + a - 1, ew = kw + a - 1;
  const Tensor<T> pull = derive_pull_kernel(w);
  const T norm = T{1} / static_cast<T>(a * a);
  Tensor<T> f({o_n, i_n, eh, ew});
  for (std::size_t o = 0; o < o_n; ++o)
    for (std::size_t i = 0; i < i_n; ++i) {
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) f.at(o, i, y + r, x + r) = w.at(o, i, y, x);
      // Full convolution of the pull filter with the a x a box.
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) {
          const T v = alpha[o] * pull.at(o, i, y, x) * norm;
          for (std::size_t dy = 0; dy < a; ++dy)
            for (std::size_t dx = 0; dx < a; ++dx) f.at(o, i, y + dy, x + dx) -= v;
        }
    }
  return f;
}

// --- PushPullLayer ----------------------------------------------------------

template <typename T>
PushPullLayer<T>::PushPullLayer(PushPullConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t fan_in = config_.in_channels * config_.kernel_size * config_.kernel_size;
  push_weights_ = Parameter<T>(
      "stem.push_weight",
      fan_in_uniform<T>({config_.out_channels, config_.in_channels, config_.kernel_size,
                         config_.kernel_size},
                        fan_in, rng));
  init_alpha_and_bias();
}

template <typename T>
PushPullLayer<T>::PushPullLayer(PushPullConfig config, Tensor<T> push_weights)
    : config_(config) {
  config_.validate();
  const Shape expected{config_.out_channels, config_.in_channels, config_.kernel_size,
                       config_.kernel_size};
  if (push_weights.shape() != expected) {
    throw ConfigError("pushpull: push weights " + shape_string(push_weights.shape()) +
                      " do not match configured geometry " + shape_string(expected));
  }
  push_weights_ = Parameter<T>("stem.push_weight", std::move(push_weights));
  init_alpha_and_bias();
}

template <typename T>
void PushPullLayer<T>::init_alpha_and_bias() {
  alpha_ = Parameter<T>("stem.alpha",
                        Tensor<T>({config_.out_channels}, static_cast<T>(config_.alpha.value)));
  if (config_.use_bias) {
    bias_ = Parameter<T>("stem.bias", Tensor<T>({config_.out_channels}));
  }
}

template <typename T>
std::vector<Parameter<T>*> PushPullLayer<T>::parameters() {
  std::vector<Parameter<T>*> out{&push_weights_};
  if (config_.alpha.is_trainable()) out.push_back(&alpha_);
  if (bias_) out.push_back(&*bias_);
  return out;
}

template <typename T>
Var PushPullLayer<T>::forward(Tape<T>& tape, Var x) {
  const Var w = tape.parameter(push_weights_);
  const Var a = config_.alpha.is_trainable() ? tape.parameter(alpha_)
                                             : tape.constant(alpha_.value);
  const Var b = bias_ ? tape.parameter(*bias_) : Var{};
  return pushpull_unit(tape, x, w, a, b, config_);
}

template <typename T>
std::vector<std::size_t> PushPullLayer<T>::negative_alpha_filters() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < alpha_.value.size(); ++i)
    if (alpha_.value[i] < T{0}) out.push_back(i);
  return out;
}

#define PUSHPULL_INSTANTIATE(T)                                                            \
  template Tensor<T> derive_pull_kernel(const Tensor<T>&);                                 \
  template Tensor<T> derive_pull_kernel_rescaled(const Tensor<T>&);                        \
  template Var pull_kernel(Tape<T>&, Var, bool);                                           \
  template Var pushpull_unit(Tape<T>&, Var, Var, Var, Var, const PushPullConfig&);         \
  template Tensor<T> pushpull_response(const Tensor<T>&, const Tensor<T>&,                 \
                                       std::span<const T>, std::span<const T>,             \
                                       const PushPullConfig&, bool);                       \
  template Tensor<T> effective_linear_kernel(const Tensor<T>&, std::span<const T>,         \
                                             std::size_t);                                 \
  template class PushPullLayer<T>;

PUSHPULL_INSTANTIATE(float)
PUSHPULL_INSTANTIATE(double)

#undef PUSHPULL_INSTANTIATE

}  // namespace pushpull
