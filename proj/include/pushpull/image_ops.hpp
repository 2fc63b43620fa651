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
#include <cstddef>
#include <vector>

#include "pushpull/random.hpp"
#include "pushpull/tensor.hpp"

namespace pushpull::image {

// Single-channel double image, row-major.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), v(h * w, fill) {}

  double& at(std::size_t y, std::size_t x) { return v[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return v[y * width + x]; }
};

using Rgb = std::array<Plane, 3>;

// H x W x 3 float tensor <-> three planes.
Rgb to_planes(const Tensor<float>& hwc);
Tensor<float> from_planes(const Rgb& planes, bool clamp = true);

// Mirror index into [0, n), repeating the edge sample (d c b a | a b c d).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n);

std::vector<double> gaussian_kernel1d(double sigma, std::size_t radius);

// Separable Gaussian blur with reflect boundaries; radius ceil(3 sigma).
Plane gaussian_blur(const Plane& p, double sigma);

// Centered 2D correlation with an odd-sized kernel and reflect boundaries.
Plane correlate(const Plane& p, const Plane& kernel);

// Normalized disk of the given radius, smoothed by a Gaussian of alias_sigma.
Plane disk_kernel(double radius, double alias_sigma);

// Bilinear sample with clamp-to-edge.
double sample_bilinear(const Plane& p, double y, double x);

Plane resize_bilinear(const Plane& p, std::size_t h, std::size_t w);

// Exact area-weighted downsampling.
Plane resize_area(const Plane& p, std::size_t h, std::size_t w);

Plane resize_nearest(const Plane& p, std::size_t h, std::size_t w);

// Magnify about the image center by `factor` >= 1, keeping the size.
Plane zoom_center(const Plane& p, double factor);

// Gaussian-weighted line average along angle_deg through each pixel,
// taps at integer distances in [-radius, radius] sampled bilinearly.
Plane motion_blur(const Plane& p, double radius, double sigma, double angle_deg);

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v);
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b);

// Diamond-square plasma on a (2^k + 1)-sided grid at least `size` wide,
// cropped to size x size and normalized to [0,1]. Roughness shrinks by
// 1/decay per level.
Plane plasma_fractal(std::size_t size, double decay, Rng& rng);

// Ridged multi-octave value noise in [0,1].
Plane ridged_noise(std::size_t h, std::size_t w, int octaves, Rng& rng);

}  // namespace pushpull::image
