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

#include "pushpull/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pushpull/errors.hpp"

namespace pushpull::jpeg {

const QuantTable kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
};

const QuantTable kChrominanceTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
};

QuantTable scale_table(const QuantTable& base, int quality) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantTable out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return out;
}

namespace {

struct CosTable {
  std::array<double, 64> c{};
  CosTable() {
    for (int k = 0; k < 8; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n) c[k * 8 + n] = a * std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
    }
  }
};

const CosTable& cos_table() {
  static const CosTable t;
  return t;
}

}  // namespace

Block forward_dct(const Block& s) {
  const auto& c = cos_table().c;
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int k = 0; k < 8; ++k) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += c[k * 8 + x] * s[y * 8 + x];
      tmp[y * 8 + k] = acc;
    }
  for (int k = 0; k < 8; ++k)
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += c[k * 8 + y] * tmp[y * 8 + u];
      out[k * 8 + u] = acc;
    }
  return out;
}

Block inverse_dct(const Block& f) {
  const auto& c = cos_table().c;
  Block tmp{}, out{};
  for (int k = 0; k < 8; ++k)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += c[u * 8 + x] * f[k * 8 + u];
      tmp[k * 8 + x] = acc;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += c[k * 8 + y] * tmp[k * 8 + x];
      out[y * 8 + x] = acc;
    }
  return out;
}

namespace {

struct Channel {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  double at(std::size_t y, std::size_t x) const {
    return v[std::min(y, h - 1) * w + std::min(x, w - 1)];
  }
};

// Quantize/dequantize every 8x8 block of a level-shifted channel in place.
void code_channel(Channel& ch, const QuantTable& q) {
  for (std::size_t by = 0; by < ch.h; by += 8)
    for (std::size_t bx = 0; bx < ch.w; bx += 8) {
      Block b{};
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) b[y * 8 + x] = ch.at(by + y, bx + x) - 128.0;
      Block f = forward_dct(b);
      for (std::size_t i = 0; i < 64; ++i) f[i] = std::round(f[i] / q[i]) * q[i];
      const Block r = inverse_dct(f);
      for (std::size_t y = 0; y < 8 && by + y < ch.h; ++y)
        for (std::size_t x = 0; x < 8 && bx + x < ch.w; ++x) {
          ch.v[(by + y) * ch.w + bx + x] = std::clamp(std::round(r[y * 8 + x] + 128.0), 0.0, 255.0);
        }
    }
}

}  // namespace

Tensor<float> roundtrip(const Tensor<float>& hwc, int quality, bool subsample_chroma) {
  require_rank(hwc, 3, "jpeg image");
  if (hwc.dim(2) != 3) throw DimensionError("jpeg image must have 3 channels");
  const std::size_t h = hwc.dim(0), w = hwc.dim(1);
  Channel y{h, w, std::vector<double>(h * w)}, cb = y, cr = y;
  for (std::size_t i = 0; i < h * w; ++i) {
    const double r = std::round(std::clamp<double>(hwc[i * 3], 0.0, 1.0) * 255.0);
    const double g = std::round(std::clamp<double>(hwc[i * 3 + 1], 0.0, 1.0) * 255.0);
    const double b = std::round(std::clamp<double>(hwc[i * 3 + 2], 0.0, 1.0) * 255.0);
    y.v[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    cb.v[i] = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
    cr.v[i] = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
  }
  if (subsample_chroma) {
    auto down = [&](const Channel& c) {
      Channel d{(h + 1) / 2, (w + 1) / 2, {}};
      d.v.resize(d.h * d.w);
      for (std::size_t yy = 0; yy < d.h; ++yy)
        for (std::size_t xx = 0; xx < d.w; ++xx) {
          d.v[yy * d.w + xx] = (c.at(2 * yy, 2 * xx) + c.at(2 * yy, 2 * xx + 1) +
                                c.at(2 * yy + 1, 2 * xx) + c.at(2 * yy + 1, 2 * xx + 1)) / 4.0;
        }
      return d;
    };
    cb = down(cb);
    cr = down(cr);
  }
  code_channel(y, scale_table(kLuminanceTable, quality));
  const QuantTable cq = scale_table(kChrominanceTable, quality);
  code_channel(cb, cq);
  code_channel(cr, cq);

  Tensor<float> out({h, w, 3});
  const std::size_t f = subsample_chroma ? 2 : 1;
  for (std::size_t yy = 0; yy < h; ++yy)
    for (std::size_t xx = 0; xx < w; ++xx) {
      const std::size_t i = yy * w + xx;
      const double lum = y.v[i];
      const double u = cb.at(yy / f, xx / f) - 128.0;
      const double v = cr.at(yy / f, xx / f) - 128.0;
      const double rgb[3] = {lum + 1.402 * v, lum - 0.344136 * u - 0.714136 * v, lum + 1.772 * u};
      for (std::size_t c = 0; c < 3; ++c) {
        out[i * 3 + c] = static_cast<float>(std::clamp(std::round(rgb[c]), 0.0, 255.0) / 255.0);
      }
    }
  return out;
}

}  // namespace pushpull::jpeg
