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

// Independent reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "pushpull/kernels.hpp"
#include "pushpull/tensor.hpp"

namespace pushpull::testing {

// Direct six-loop cross-correlation with zero padding.
inline Tensor<double> direct_conv2d(const Tensor<double>& x, const Tensor<double>& w, std::size_t stride,
                                    std::size_t pad) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t o = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1, ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor<double> y({n, o, oh, ow});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t f = 0; f < o; ++f)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = 0.0;
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long yy = static_cast<long>(i * stride + u) - static_cast<long>(pad);
                const long xx = static_cast<long>(j * stride + v) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
                acc += x.at(b, ch, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) *
                       w.at(f, ch, u, v);
              }
          y.at(b, f, i, j) = acc;
        }
  return y;
}

// Uniform a x a window, stride 1, zero same-padding, divided by a^2.
inline Tensor<double> direct_box_average(const Tensor<double>& x, std::size_t a) {
  Tensor<double> y(x.shape());
  const long r = static_cast<long>(a / 2);
  for (std::size_t b = 0; b < x.dim(0); ++b)
    for (std::size_t c = 0; c < x.dim(1); ++c)
      for (long i = 0; i < static_cast<long>(x.dim(2)); ++i)
        for (long j = 0; j < static_cast<long>(x.dim(3)); ++j) {
          double acc = 0.0;
          for (long u = -r; u <= r; ++u)
            for (long v = -r; v <= r; ++v) {
              const long yy = i + u, xx = j + v;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(x.dim(2)) || xx >= static_cast<long>(x.dim(3)))
                continue;
              acc += x.at(b, c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
          y.at(b, c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
              acc / static_cast<double>(a * a);
        }
  return y;
}

// O(S^4) DFT magnitude of a kh x kw kernel zero-padded at the top-left of an
// S x S grid, DC moved to (S/2, S/2).
inline std::vector<double> naive_dft_magnitude(const std::vector<double>& k, std::size_t kh, std::size_t kw,
                                               std::size_t s) {
  std::vector<double> out(s * s);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t u = 0; u < s; ++u)
    for (std::size_t v = 0; v < s; ++v) {
      std::complex<double> acc = 0.0;
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) {
          const double ang = -two_pi * (static_cast<double>(u * y) + static_cast<double>(v * x)) / static_cast<double>(s);
          acc += k[y * kw + x] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
      out[((u + s / 2) % s) * s + (v + s / 2) % s] = std::abs(acc);
    }
  return out;
}

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

// Central differences of a scalar function with respect to every entry of t.
inline Tensor<double> numeric_gradient(Tensor<double>& t, const std::function<double()>& f, double h = 1e-6) {
  Tensor<double> g(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double keep = t[i];
    t[i] = keep + h;
    const double up = f();
    t[i] = keep - h;
    const double down = f();
    t[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max |a - b| / max(1, max |b|) style relative error over all entries.
inline double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-8);
}

}  // namespace pushpull::testing
