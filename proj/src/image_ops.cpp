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

#include "pushpull/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pushpull/errors.hpp"

namespace pushpull::image {

Rgb to_planes(const Tensor<float>& hwc) {
  require_rank(hwc, 3, "image");
  if (hwc.dim(2) != 3) throw DimensionError("image must have 3 channels, got " + shape_string(hwc.shape()));
  const std::size_t h = hwc.dim(0), w = hwc.dim(1);
  Rgb out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t c = 0; c < 3; ++c) out[c].v[i] = hwc[i * 3 + c];
  return out;
}

Tensor<float> from_planes(const Rgb& planes, bool clamp) {
  const std::size_t h = planes[0].height, w = planes[0].width;
  Tensor<float> out({h, w, 3});
  for (std::size_t i = 0; i < h * w; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      double v = planes[c].v[i];
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      out[i * 3 + c] = static_cast<float>(v);
    }
  return out;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel1d(double sigma, std::size_t radius) {
  std::vector<double> k(2 * radius + 1);
  if (sigma <= 0.0) {
    std::fill(k.begin(), k.end(), 0.0);
    k[radius] = 1.0;
    return k;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Plane gaussian_blur(const Plane& p, double sigma) {
  if (sigma <= 0.0) return p;
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  const auto k = gaussian_kernel1d(sigma, radius);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto h = static_cast<std::ptrdiff_t>(p.height), w = static_cast<std::ptrdiff_t>(p.width);
  Plane tmp(p.height, p.width), out(p.height, p.width);
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -r; d <= r; ++d)
        acc += k[static_cast<std::size_t>(d + r)] *
               p.v[static_cast<std::size_t>(y * w + reflect_index(x + d, w))];
      tmp.v[static_cast<std::size_t>(y * w + x)] = acc;
    }
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t d = -r; d <= r; ++d)
        acc += k[static_cast<std::size_t>(d + r)] *
               tmp.v[static_cast<std::size_t>(reflect_index(y + d, h) * w + x)];
      out.v[static_cast<std::size_t>(y * w + x)] = acc;
    }
  return out;
}

Plane correlate(const Plane& p, const Plane& kernel) {
  if (kernel.height % 2 == 0 || kernel.width % 2 == 0) {
    throw ContractError("correlate: kernel sides must be odd");
  }
  const auto ry = static_cast<std::ptrdiff_t>(kernel.height / 2);
  const auto rx = static_cast<std::ptrdiff_t>(kernel.width / 2);
  const auto h = static_cast<std::ptrdiff_t>(p.height), w = static_cast<std::ptrdiff_t>(p.width);
  Plane out(p.height, p.width);
  for (std::ptrdiff_t y = 0; y < h; ++y)
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t dy = -ry; dy <= ry; ++dy) {
        const std::ptrdiff_t sy = reflect_index(y + dy, h);
        for (std::ptrdiff_t dx = -rx; dx <= rx; ++dx) {
          acc += kernel.at(static_cast<std::size_t>(dy + ry), static_cast<std::size_t>(dx + rx)) *
                 p.v[static_cast<std::size_t>(sy * w + reflect_index(x + dx, w))];
        }
      }
      out.v[static_cast<std::size_t>(y * w + x)] = acc;
    }
  return out;
}

Plane disk_kernel(double radius, double alias_sigma) {
  const auto half = static_cast<std::size_t>(std::ceil(radius) + std::ceil(3.0 * alias_sigma));
  const std::size_t n = 2 * half + 1;
  Plane disk(n, n);
  double sum = 0.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dy = static_cast<double>(y) - static_cast<double>(half);
      const double dx = static_cast<double>(x) - static_cast<double>(half);
      if (dx * dx + dy * dy <= radius * radius) {
        disk.at(y, x) = 1.0;
        sum += 1.0;
      }
    }
  for (double& v : disk.v) v /= sum;
  Plane k = gaussian_blur(disk, alias_sigma);
  double ks = 0.0;
  for (double v : k.v) ks += v;
  for (double& v : k.v) v /= ks;
  return k;
}

double sample_bilinear(const Plane& p, double y, double x) {
  const double maxy = static_cast<double>(p.height - 1), maxx = static_cast<double>(p.width - 1);
  y = std::clamp(y, 0.0, maxy);
  x = std::clamp(x, 0.0, maxx);
  const auto y0 = static_cast<std::size_t>(std::floor(y));
  const auto x0 = static_cast<std::size_t>(std::floor(x));
  const std::size_t y1 = std::min(y0 + 1, p.height - 1), x1 = std::min(x0 + 1, p.width - 1);
  const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
  const double top = p.at(y0, x0) * (1.0 - fx) + p.at(y0, x1) * fx;
  const double bot = p.at(y1, x0) * (1.0 - fx) + p.at(y1, x1) * fx;
  return top * (1.0 - fy) + bot * fy;
}

Plane resize_bilinear(const Plane& p, std::size_t h, std::size_t w) {
  Plane out(h, w);
  const double sy = static_cast<double>(p.height) / static_cast<double>(h);
  const double sx = static_cast<double>(p.width) / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out.at(y, x) = sample_bilinear(p, (static_cast<double>(y) + 0.5) * sy - 0.5,
                                     (static_cast<double>(x) + 0.5) * sx - 0.5);
    }
  return out;
}

namespace {

// Overlap of source cell [i, i+1) with the target interval [a, b).
double overlap(double a, double b, std::size_t i) {
  const double lo = std::max(a, static_cast<double>(i));
  const double hi = std::min(b, static_cast<double>(i + 1));
  return std::max(0.0, hi - lo);
}

}  // namespace

Plane resize_area(const Plane& p, std::size_t h, std::size_t w) {
  Plane out(h, w);
  const double sy = static_cast<double>(p.height) / static_cast<double>(h);
  const double sx = static_cast<double>(p.width) / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y) {
    const double y0 = static_cast<double>(y) * sy, y1 = y0 + sy;
    const auto iy0 = static_cast<std::size_t>(std::floor(y0));
    const auto iy1 = std::min(p.height, static_cast<std::size_t>(std::ceil(y1)));
    for (std::size_t x = 0; x < w; ++x) {
      const double x0 = static_cast<double>(x) * sx, x1 = x0 + sx;
      const auto ix0 = static_cast<std::size_t>(std::floor(x0));
      const auto ix1 = std::min(p.width, static_cast<std::size_t>(std::ceil(x1)));
      double acc = 0.0, area = 0.0;
      for (std::size_t iy = iy0; iy < iy1; ++iy) {
        const double wy = overlap(y0, y1, iy);
        for (std::size_t ix = ix0; ix < ix1; ++ix) {
          const double a = wy * overlap(x0, x1, ix);
          acc += a * p.at(iy, ix);
          area += a;
        }
      }
      out.at(y, x) = acc / area;
    }
  }
  return out;
}

Plane resize_nearest(const Plane& p, std::size_t h, std::size_t w) {
  Plane out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t sy = std::min(p.height - 1, y * p.height / h);
    for (std::size_t x = 0; x < w; ++x) out.at(y, x) = p.at(sy, std::min(p.width - 1, x * p.width / w));
  }
  return out;
}

Plane zoom_center(const Plane& p, double factor) {
  if (factor < 1.0) throw ContractError("zoom_center: factor must be >= 1");
  Plane out(p.height, p.width);
  const double cy = (static_cast<double>(p.height) - 1.0) / 2.0;
  const double cx = (static_cast<double>(p.width) - 1.0) / 2.0;
  for (std::size_t y = 0; y < p.height; ++y)
    for (std::size_t x = 0; x < p.width; ++x) {
      out.at(y, x) = sample_bilinear(p, cy + (static_cast<double>(y) - cy) / factor,
                                     cx + (static_cast<double>(x) - cx) / factor);
    }
  return out;
}

Plane motion_blur(const Plane& p, double radius, double sigma, double angle_deg) {
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double uy = -std::sin(theta), ux = std::cos(theta);
  const auto r = static_cast<int>(std::floor(radius));
  std::vector<double> weights;
  double sum = 0.0;
  for (int t = -r; t <= r; ++t) {
    const double wt = sigma > 0.0 ? std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma)) : (t == 0);
    weights.push_back(wt);
    sum += wt;
  }
  Plane out(p.height, p.width);
  for (std::size_t y = 0; y < p.height; ++y)
    for (std::size_t x = 0; x < p.width; ++x) {
      double acc = 0.0;
      for (int t = -r; t <= r; ++t) {
        acc += weights[static_cast<std::size_t>(t + r)] *
               sample_bilinear(p, static_cast<double>(y) + t * uy, static_cast<double>(x) + t * ux);
      }
      out.at(y, x) = acc / sum;
    }
  return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
    return;
  }
  if (mx == r) {
    h = (g - b) / d;
  } else if (mx == g) {
    h = 2.0 + (b - r) / d;
  } else {
    h = 4.0 + (r - g) / d;
  }
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  if (s == 0.0) {
    r = g = b = v;
    return;
  }
  const double hh = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

Plane plasma_fractal(std::size_t size, double decay, Rng& rng) {
  std::size_t n = 1;
  while (n + 1 < size) n *= 2;
  const std::size_t side = n + 1;
  Plane m(side, side);
  double wibble = 1.0;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t step = n; step > 1; step /= 2) {
    const std::size_t half = step / 2;
    // Square step: centers from the four corners.
    for (std::size_t y = half; y < side; y += step)
      for (std::size_t x = half; x < side; x += step) {
        const double avg = (m.at(y - half, x - half) + m.at(y - half, x + half) +
                            m.at(y + half, x - half) + m.at(y + half, x + half)) / 4.0;
        m.at(y, x) = avg + wibble * u(rng);
      }
    // Diamond step: edge midpoints from their in-range neighbors.
    for (std::size_t y = 0; y < side; y += half)
      for (std::size_t x = (y / half) % 2 == 0 ? half : 0; x < side; x += step) {
        double acc = 0.0;
        int cnt = 0;
        if (y >= half) { acc += m.at(y - half, x); ++cnt; }
        if (y + half < side) { acc += m.at(y + half, x); ++cnt; }
        if (x >= half) { acc += m.at(y, x - half); ++cnt; }
        if (x + half < side) { acc += m.at(y, x + half); ++cnt; }
        m.at(y, x) = acc / cnt + wibble * u(rng);
      }
    wibble /= decay;
  }
  Plane out(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) out.at(y, x) = m.at(y, x);
  const auto [lo, hi] = std::minmax_element(out.v.begin(), out.v.end());
  const double mn = *lo, range = *hi - *lo;
  for (double& v : out.v) v = range > 0.0 ? (v - mn) / range : 0.0;
  return out;
}

Plane ridged_noise(std::size_t h, std::size_t w, int octaves, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane out(h, w);
  double amp = 1.0, total = 0.0;
  for (int o = 0; o < octaves; ++o) {
    const std::size_t cells = std::size_t{2} << o;
    Plane lattice(cells + 1, cells + 1);
    for (double& v : lattice.v) v = u(rng);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double gy = static_cast<double>(y) * cells / static_cast<double>(h);
        const double gx = static_cast<double>(x) * cells / static_cast<double>(w);
        const auto iy = static_cast<std::size_t>(gy), ix = static_cast<std::size_t>(gx);
        double fy = gy - iy, fx = gx - ix;
        fy = fy * fy * (3.0 - 2.0 * fy);
        fx = fx * fx * (3.0 - 2.0 * fx);
        const double top = lattice.at(iy, ix) * (1 - fx) + lattice.at(iy, ix + 1) * fx;
        const double bot = lattice.at(iy + 1, ix) * (1 - fx) + lattice.at(iy + 1, ix + 1) * fx;
        const double n = top * (1 - fy) + bot * fy;
        const double ridge = 1.0 - std::abs(2.0 * n - 1.0);
        out.at(y, x) += amp * ridge * ridge;
      }
    total += amp;
    amp *= 0.5;
  }
  for (double& v : out.v) v /= total;
  return out;
}

}  // namespace pushpull::image
