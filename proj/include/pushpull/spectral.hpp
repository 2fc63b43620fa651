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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pushpull/tensor.hpp"

namespace pushpull {

// DC-centered magnitude spectrum. magnitudes is row-major S x S with the
// zero frequency at (S/2, S/2).
struct SpectrumGrid {
  std::size_t fft_size = 0;
  std::vector<double> magnitudes;
  std::string source;

  double at(std::size_t row, std::size_t col) const { return magnitudes[row * fft_size + col]; }
};

// Zero-pads one channel of the kernel into the top-left of an S x S grid and
// takes the unnormalized forward DFT. kernel is kh x kw or I x kh x kw.
// Throws ContractError when S < max(kh, kw).
SpectrumGrid kernel_spectrum(const Tensor<double>& kernel, std::size_t fft_size,
                             std::size_t channel = 0);

struct SpectralMode {
  enum class Kind { kPush, kPull, kPushPull };
  Kind kind = Kind::kPush;
  // One value shared by every filter, or one per filter.
  std::vector<double> alpha;
  std::size_t avg_size = 0;

  static SpectralMode push() { return {Kind::kPush, {}, 0}; }
  static SpectralMode pull() { return {Kind::kPull, {}, 0}; }
  static SpectralMode pushpull(std::vector<double> alpha, std::size_t avg_size) {
    return {Kind::kPushPull, std::move(alpha), avg_size};
  }
};

std::string describe(const SpectralMode& mode);

// Mean over the O filters of the channel-0 spectrum of w, pull(w) or the
// effective push-pull kernel. With all_channels the per-filter spectrum is
// itself the mean over input channels.
SpectrumGrid averaged_layer_spectrum(const Tensor<double>& kernels, const SpectralMode& mode,
                                     std::size_t fft_size, bool all_channels = false);

// Squared magnitudes binned by radius |k| / (S/2) into n_bins equal-width
// annuli; radii beyond the axis Nyquist fall into the last bin. Sums to 1.
// Throws ContractError for n_bins < 3.
std::vector<double> radial_energy_profile(const SpectrumGrid& spectrum, std::size_t n_bins);

void write_spectrum_csv(std::ostream& os, const SpectrumGrid& spectrum);
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumGrid& spectrum);
// 8-bit binary PGM, linearly scaled so the maximum magnitude maps to 255.
void write_spectrum_pgm(const std::filesystem::path& path, const SpectrumGrid& spectrum);
void write_profile_csv(const std::filesystem::path& path, std::span<const double> profile);

// --- simulated edge experiment ------------------------------------------------

// 3x3 vertical-edge detector with columns (-1/3, -1/3, +2/3): zero-sum, with
// asymmetric extrema so its pull kernel is not its negation.
Tensor<double> analytic_vertical_edge_kernel();

enum class ResponseMagnitude { kRectified, kAbsolute };

struct SnrOptions {
  std::size_t image_size = 64;
  double background = 0.25;
  double foreground = 0.75;
  double noise_sigma = 0.1;
  std::size_t band_width = 5;
  bool with_edge = true;
  ResponseMagnitude magnitude = ResponseMagnitude::kRectified;
};

struct SnrResult {
  double snr_push_db = 0.0;
  double snr_pushpull_db = 0.0;
  double signal_push = 0.0;
  double noise_push = 0.0;
  double signal_pushpull = 0.0;
  double noise_pushpull = 0.0;
};

// Step edge at column S/2 plus N(0, sigma^2) noise. Signal is the mean
// response over the band centered on the edge, noise the mean over the rest;
// both exclude a border margin covering the kernel and average footprints.
// SNR = 20 log10(A_s / (A_n + 1e-12)); an all-zero signal gives -infinity.
SnrResult snr_edge_experiment(const Tensor<double>& push_kernel, double alpha,
                              std::size_t avg_size, std::uint64_t seed,
                              const SnrOptions& options = {});

// The edge image before noise, 1 x 1 x S x S.
Tensor<double> edge_image(const SnrOptions& options);

}  // namespace pushpull
