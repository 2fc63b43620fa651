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

#include "pushpull/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "pushpull/errors.hpp"
#include "pushpull/pushpull.hpp"
#include "pushpull/random.hpp"

namespace pushpull {
namespace {

// Unnormalized forward DFT of an S x S real grid, returned as magnitudes in
// natural (DC at 0,0) order.
std::vector<double> dft_magnitudes(const std::vector<double>& grid, std::size_t s) {
  const int n = static_cast<int>(s);
  fftw_complex* in = fftw_alloc_complex(s * s);
  fftw_complex* out = fftw_alloc_complex(s * s);
  if (in == nullptr || out == nullptr) {
    fftw_free(in);
    fftw_free(out);
    throw std::bad_alloc();
  }
  fftw_plan plan = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t i = 0; i < s * s; ++i) {
    in[i][0] = grid[i];
    in[i][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> mag(s * s);
  for (std::size_t i = 0; i < s * s; ++i) mag[i] = std::hypot(out[i][0], out[i][1]);
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  return mag;
}

std::vector<double> center(const std::vector<double>& natural, std::size_t s) {
  std::vector<double> out(s * s);
  const std::size_t h = s / 2;
  for (std::size_t u = 0; u < s; ++u)
    for (std::size_t v = 0; v < s; ++v) out[((u + h) % s) * s + (v + h) % s] = natural[u * s + v];
  return out;
}

// Magnitude spectrum of plane (o, c) of an O x I x kh x kw tensor.
std::vector<double> plane_spectrum(const Tensor<double>& k, std::size_t o, std::size_t c,
                                   std::size_t s) {
  const std::size_t kh = k.dim(2), kw = k.dim(3);
  std::vector<double> grid(s * s, 0.0);
  for (std::size_t y = 0; y < kh; ++y)
    for (std::size_t x = 0; x < kw; ++x) grid[y * s + x] = k.at(o, c, y, x);
  return center(dft_magnitudes(grid, s), s);
}

void require_fft_size(std::size_t s, std::size_t kh, std::size_t kw) {
  if (s < std::max(kh, kw) || s == 0) {
    throw ContractError("fft_size " + std::to_string(s) + " smaller than kernel support " +
                        std::to_string(kh) + "x" + std::to_string(kw));
  }
}

}  // namespace

SpectrumGrid kernel_spectrum(const Tensor<double>& kernel, std::size_t fft_size,
                             std::size_t channel) {
  Tensor<double> k4;
  if (kernel.rank() == 2) {
    k4 = kernel.reshaped({1, 1, kernel.dim(0), kernel.dim(1)});
  } else if (kernel.rank() == 3) {
    k4 = kernel.reshaped({1, kernel.dim(0), kernel.dim(1), kernel.dim(2)});
  } else {
    throw DimensionError("kernel_spectrum expects a rank-2 or rank-3 kernel, got " +
                         shape_string(kernel.shape()));
  }
  if (channel >= k4.dim(1)) {
    throw RangeError("kernel_spectrum: channel " + std::to_string(channel) + " out of range");
  }
  require_fft_size(fft_size, k4.dim(2), k4.dim(3));
  SpectrumGrid g;
  g.fft_size = fft_size;
  g.magnitudes = plane_spectrum(k4, 0, channel, fft_size);
  g.source = "kernel " + shape_string(kernel.shape()) + " channel " + std::to_string(channel);
  return g;
}

std::string describe(const SpectralMode& mode) {
  switch (mode.kind) {
    case SpectralMode::Kind::kPush:
      return "push";
    case SpectralMode::Kind::kPull:
      return "pull";
    case SpectralMode::Kind::kPushPull: {
      std::ostringstream os;
      os << "pushpull alpha=";
      if (mode.alpha.size() == 1) {
        os << mode.alpha[0];
      } else {
        os << "per-filter";
      }
      os << " avg=" << mode.avg_size;
      return os.str();
    }
  }
  return "unknown";
}

SpectrumGrid averaged_layer_spectrum(const Tensor<double>& kernels, const SpectralMode& mode,
                                     std::size_t fft_size, bool all_channels) {
  require_rank(kernels, 4, "layer spectrum kernels");
  const std::size_t o_n = kernels.dim(0);
  Tensor<double> k;
  switch (mode.kind) {
    case SpectralMode::Kind::kPush:
      k = kernels;
      break;
    case SpectralMode::Kind::kPull:
      k = derive_pull_kernel(kernels);
      break;
    case SpectralMode::Kind::kPushPull: {
      std::vector<double> alpha = mode.alpha;
      if (alpha.size() == 1) alpha.assign(o_n, mode.alpha[0]);
      if (alpha.size() != o_n) {
        throw DimensionError("layer spectrum: " + std::to_string(mode.alpha.size()) +
                             " alpha values for " + std::to_string(o_n) + " filters");
      }
      k = effective_linear_kernel(kernels, std::span<const double>(alpha), mode.avg_size);
      break;
    }
  }
  require_fft_size(fft_size, k.dim(2), k.dim(3));
  const std::size_t channels = all_channels ? k.dim(1) : 1;
  std::vector<double> acc(fft_size * fft_size, 0.0);
  for (std::size_t o = 0; o < o_n; ++o)
    for (std::size_t c = 0; c < channels; ++c) {
      const auto m = plane_spectrum(k, o, c, fft_size);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += m[i];
    }
  const double inv = 1.0 / static_cast<double>(o_n * channels);
  for (double& v : acc) v *= inv;
  SpectrumGrid g;
  g.fft_size = fft_size;
  g.magnitudes = std::move(acc);
  g.source = describe(mode) + (all_channels ? " all-channels" : " channel 0");
  return g;
}

std::vector<double> radial_energy_profile(const SpectrumGrid& spectrum, std::size_t n_bins) {
  if (n_bins < 3) throw ContractError("radial_energy_profile needs at least 3 bins");
  const std::size_t s = spectrum.fft_size;
  const double c = static_cast<double>(s / 2);
  const double nyquist = static_cast<double>(s) / 2.0;
  std::vector<double> bins(n_bins, 0.0);
  double total = 0.0;
  for (std::size_t u = 0; u < s; ++u)
    for (std::size_t v = 0; v < s; ++v) {
      const double r = std::hypot(static_cast<double>(u) - c, static_cast<double>(v) - c);
      auto b = static_cast<std::size_t>(r / nyquist * static_cast<double>(n_bins));
      b = std::min(b, n_bins - 1);
      const double e = spectrum.at(u, v) * spectrum.at(u, v);
      bins[b] += e;
      total += e;
    }
  if (total > 0.0) {
    for (double& b : bins) b /= total;
  }
  return bins;
}

void write_spectrum_csv(std::ostream& os, const SpectrumGrid& spectrum) {
  os << std::setprecision(17);
  const std::size_t s = spectrum.fft_size;
  for (std::size_t u = 0; u < s; ++u) {
    for (std::size_t v = 0; v < s; ++v) {
      if (v) os << ',';
      os << spectrum.at(u, v);
    }
    os << '\n';
  }
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumGrid& spectrum) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_spectrum_csv(os, spectrum);
}

void write_spectrum_pgm(const std::filesystem::path& path, const SpectrumGrid& spectrum) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t s = spectrum.fft_size;
  os << "P5\n" << s << ' ' << s << "\n255\n";
  const double peak = *std::max_element(spectrum.magnitudes.begin(), spectrum.magnitudes.end());
  for (double m : spectrum.magnitudes) {
    const double v = peak > 0.0 ? std::round(255.0 * m / peak) : 0.0;
    os.put(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
  }
}

void write_profile_csv(const std::filesystem::path& path, std::span<const double> profile) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "bin,energy_fraction\n" << std::setprecision(17);
  for (std::size_t i = 0; i < profile.size(); ++i) os << i << ',' << profile[i] << '\n';
}

// --- edge experiment -----------------------------------------------------------

Tensor<double> analytic_vertical_edge_kernel() {
  const double a = -1.0 / 3.0, b = 2.0 / 3.0;
  return Tensor<double>({3, 3}, {a, a, b, a, a, b, a, a, b});
}

Tensor<double> edge_image(const SnrOptions& options) {
  const std::size_t s = options.image_size;
  Tensor<double> img({1, 1, s, s}, options.background);
  if (options.with_edge) {
    for (std::size_t y = 0; y < s; ++y)
      for (std::size_t x = s / 2; x < s; ++x) img.at(0, 0, y, x) = options.foreground;
  }
  return img;
}

namespace {

struct BandMeans {
  double signal = 0.0;
  double noise = 0.0;
};

BandMeans band_means(const Tensor<double>& response, std::size_t margin, const SnrOptions& o,
                     bool absolute) {
  const std::size_t s = o.image_size;
  const std::size_t edge = s / 2;
  const std::size_t half = o.band_width / 2;
  double sig = 0.0, noi = 0.0;
  std::size_t ns = 0, nn = 0;
  for (std::size_t y = margin; y + margin < s; ++y)
    for (std::size_t x = margin; x + margin < s; ++x) {
      const double r = response.at(0, 0, y, x);
      const double m = absolute ? std::abs(r) : std::max(r, 0.0);
      if (x + half >= edge && x <= edge + half) {
        sig += m;
        ++ns;
      } else {
        noi += m;
        ++nn;
      }
    }
  if (ns == 0 || nn == 0) throw ContractError("snr experiment: image too small for its margins");
  return {sig / static_cast<double>(ns), noi / static_cast<double>(nn)};
}

double to_db(const BandMeans& m) {
  if (m.signal == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(m.signal / (m.noise + 1e-12));
}

}  // namespace

SnrResult snr_edge_experiment(const Tensor<double>& push_kernel, double alpha,
                              std::size_t avg_size, std::uint64_t seed,
                              const SnrOptions& options) {
  require_rank(push_kernel, 2, "snr push kernel");
  if (options.noise_sigma < 0.0) throw ContractError("snr experiment: negative noise sigma");
  const std::size_t kh = push_kernel.dim(0), kw = push_kernel.dim(1);
  if (kh != kw || kh % 2 == 0) throw ConfigError("snr experiment: kernel must be square and odd");

  Tensor<double> x = edge_image(options);
  if (options.noise_sigma > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, options.noise_sigma);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += noise(rng);
  }

  PushPullConfig config;
  config.in_channels = 1;
  config.out_channels = 1;
  config.kernel_size = kh;
  config.padding = kh / 2;
  config.avg_size = avg_size;
  config.alpha = AlphaMode::fixed(alpha);
  config.use_bias = false;
  config.validate();
  const Tensor<double> w = push_kernel.reshaped({1, 1, kh, kw});

  const std::vector<double> zero_alpha{0.0};
  const std::vector<double> alpha_v{alpha};
  const Tensor<double> push =
      pushpull_response(x, w, std::span<const double>(zero_alpha), {}, config, true);
  const Tensor<double> pp =
      pushpull_response(x, w, std::span<const double>(alpha_v), {}, config, true);

  const std::size_t margin = kh / 2 + (avg_size > 1 ? avg_size / 2 : 0) + 1;
  const bool absolute = options.magnitude == ResponseMagnitude::kAbsolute;
  const BandMeans mp = band_means(push, margin, options, absolute);
  const BandMeans mq = band_means(pp, margin, options, absolute);

  SnrResult r;
  r.signal_push = mp.signal;
  r.noise_push = mp.noise;
  r.signal_pushpull = mq.signal;
  r.noise_pushpull = mq.noise;
  r.snr_push_db = to_db(mp);
  r.snr_pushpull_db = to_db(mq);
  return r;
}

}  // namespace pushpull
