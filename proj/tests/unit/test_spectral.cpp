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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/pushpull.hpp"
#include "pushpull/spectral.hpp"

using namespace pushpull;
using namespace pushpull::testing;

namespace {

using cd = std::complex<double>;

// Naive complex DFT of a kh x kw array placed at (oy, ox) in an S x S grid,
// indexed by unshifted frequency.
std::vector<cd> naive_dft(const std::vector<double>& k, std::size_t kh, std::size_t kw, std::size_t s,
                          std::size_t oy = 0, std::size_t ox = 0) {
  std::vector<cd> out(s * s);
  for (std::size_t u = 0; u < s; ++u)
    for (std::size_t v = 0; v < s; ++v) {
      cd acc = 0.0;
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) {
          const double ang = -2.0 * std::numbers::pi *
                             (static_cast<double>(u * (y + oy)) + static_cast<double>(v * (x + ox))) /
                             static_cast<double>(s);
          acc += k[y * kw + x] * cd(std::cos(ang), std::sin(ang));
        }
      out[u * s + v] = acc;
    }
  return out;
}

std::size_t centered(std::size_t u, std::size_t v, std::size_t s) {
  return ((u + s / 2) % s) * s + (v + s / 2) % s;
}

Tensor<double> delta_kernel(std::size_t k) {
  Tensor<double> t({k, k});
  t[(k / 2) * k + k / 2] = 1.0;
  return t;
}

}  // namespace

TEST(KernelSpectrum, DeltaIsFlat) {
  const auto s = kernel_spectrum(delta_kernel(3), 32);
  for (double m : s.magnitudes) EXPECT_NEAR(m, 1.0, 1e-12);
}

TEST(KernelSpectrum, BoxHasZerosAtMultiplesOfSOverK) {
  const std::size_t k = 4, n = 32;
  const Tensor<double> box({k, k}, 1.0 / 16.0);
  const auto s = kernel_spectrum(box, n);
  EXPECT_NEAR(s.at(n / 2, n / 2), 1.0, 1e-12);
  for (std::size_t m = 1; m < k; ++m) {
    EXPECT_NEAR(s.at(n / 2, (n / 2 + m * n / k) % n), 0.0, 1e-12);
    EXPECT_NEAR(s.at((n / 2 + m * n / k) % n, n / 2), 0.0, 1e-12);
  }
}

TEST(KernelSpectrum, MatchesNaiveDftAndParseval) {
  std::mt19937_64 rng(1);
  for (std::size_t k : {3u, 5u, 7u}) {
    for (std::size_t n : {16u, 31u, 64u}) {
      const auto w = random_tensor({k, k}, rng);
      const auto s = kernel_spectrum(w, n);
      const auto ref = naive_dft_magnitude(w.storage(), k, k, n);
      double worst = 0.0, energy = 0.0, spatial = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        worst = std::max(worst, std::abs(s.magnitudes[i] - ref[i]));
        energy += s.magnitudes[i] * s.magnitudes[i];
      }
      for (double v : w.data()) spatial += v * v;
      EXPECT_LT(worst, 1e-10);
      EXPECT_NEAR(energy / static_cast<double>(n * n), spatial, 1e-8 * spatial);
    }
  }
}

TEST(KernelSpectrum, RealKernelIsPointSymmetric) {
  std::mt19937_64 rng(2);
  const std::size_t n = 32;
  const auto s = kernel_spectrum(random_tensor({5, 5}, rng), n);
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t c = 1; c < n; ++c) EXPECT_NEAR(s.at(r, c), s.at(n - r, n - c), 1e-12);
}

TEST(KernelSpectrum, RejectsGridSmallerThanKernel) {
  EXPECT_THROW(kernel_spectrum(delta_kernel(7), 5), ContractError);
}

TEST(AveragedSpectrum, SingleFilterEqualsKernelSpectrum) {
  std::mt19937_64 rng(3);
  const auto w = random_tensor({1, 3, 3, 3}, rng);
  const auto avg = averaged_layer_spectrum(w, SpectralMode::push(), 32);
  const auto one = kernel_spectrum(w.reshaped({3, 3, 3}), 32, 0);
  for (std::size_t i = 0; i < one.magnitudes.size(); ++i)
    EXPECT_NEAR(avg.magnitudes[i], one.magnitudes[i], 1e-12);
}

TEST(AveragedSpectrum, AlphaZeroPushPullEqualsPush) {
  std::mt19937_64 rng(4);
  const auto w = random_tensor({4, 3, 3, 3}, rng);
  // With alpha = 0 the effective kernel is w shifted by r; shifts do not
  // change magnitudes.
  const auto push = averaged_layer_spectrum(w, SpectralMode::push(), 32);
  const auto pp = averaged_layer_spectrum(w, SpectralMode::pushpull({0.0}, 3), 32);
  for (std::size_t i = 0; i < push.magnitudes.size(); ++i)
    EXPECT_NEAR(pp.magnitudes[i], push.magnitudes[i], 1e-12);
}

TEST(AveragedSpectrum, PushPullMatchesFrequencyDomainComposition) {
  std::mt19937_64 rng(5);
  const std::size_t n = 24, a = 3, r = 1;
  const auto w = random_tensor({1, 1, 3, 3}, rng);
  const double alpha = 1.7;
  const auto pull = derive_pull_kernel(w);
  const std::vector<double> box(a * a, 1.0);
  const auto fw = naive_dft(w.storage(), 3, 3, n, r, r);
  const auto fp = naive_dft(pull.storage(), 3, 3, n);
  const auto fb = naive_dft(box, a, a, n);
  const auto s = averaged_layer_spectrum(w, SpectralMode::pushpull({alpha}, a), n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      const cd f = fw[u * n + v] - alpha / static_cast<double>(a * a) * fp[u * n + v] * fb[u * n + v];
      EXPECT_NEAR(s.magnitudes[centered(u, v, n)], std::abs(f), 1e-10);
    }
}

TEST(AveragedSpectrum, PullModeUsesPullKernel) {
  std::mt19937_64 rng(6);
  const auto w = random_tensor({2, 1, 3, 3}, rng);
  const auto pull = derive_pull_kernel(w);
  const auto s = averaged_layer_spectrum(w, SpectralMode::pull(), 16);
  std::vector<double> expect(256, 0.0);
  for (std::size_t o = 0; o < 2; ++o) {
    const std::vector<double> k(pull.storage().begin() + static_cast<long>(o * 9),
                                pull.storage().begin() + static_cast<long>(o * 9 + 9));
    const auto m = naive_dft_magnitude(k, 3, 3, 16);
    for (std::size_t i = 0; i < 256; ++i) expect[i] += m[i] / 2.0;
  }
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(s.magnitudes[i], expect[i], 1e-10);
}

TEST(RadialProfile, DeltaMatchesAreaCount) {
  const std::size_t n = 32, bins = 8;
  const auto prof = radial_energy_profile(kernel_spectrum(delta_kernel(3), n), bins);
  std::vector<double> count(bins, 0.0);
  for (long u = -static_cast<long>(n / 2); u < static_cast<long>(n / 2); ++u)
    for (long v = -static_cast<long>(n / 2); v < static_cast<long>(n / 2); ++v) {
      const double rad = std::hypot(static_cast<double>(u), static_cast<double>(v)) / (n / 2.0);
      count[std::min(static_cast<std::size_t>(rad * bins), bins - 1)] += 1.0;
    }
  double total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    EXPECT_NEAR(prof[b], count[b] / static_cast<double>(n * n), 1e-12);
    total += prof[b];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(RadialProfile, BoxConcentratesInLowBins) {
  const Tensor<double> box({5, 5}, 1.0 / 25.0);
  const auto prof = radial_energy_profile(kernel_spectrum(box, 64), 8);
  const auto flat = radial_energy_profile(kernel_spectrum(delta_kernel(3), 64), 8);
  // Lowest quarter of the radial range.
  EXPECT_GT(prof[0] + prof[1], 0.6);
  EXPECT_GT(prof[0] + prof[1], 10.0 * (flat[0] + flat[1]));
  EXPECT_LT(prof[7], flat[7]);
  EXPECT_THROW(radial_energy_profile(kernel_spectrum(box, 64), 2), ContractError);
}

TEST(RadialProfile, IsADistributionForEveryMode) {
  std::mt19937_64 rng(7);
  const auto w = random_tensor({8, 3, 3, 3}, rng);
  for (const auto& mode : {SpectralMode::push(), SpectralMode::pull(), SpectralMode::pushpull({1.0}, 5)}) {
    const auto p = radial_energy_profile(averaged_layer_spectrum(w, mode, 32, true), 6);
    double t = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      t += v;
    }
    EXPECT_NEAR(t, 1.0, 1e-12);
  }
}

TEST(SpectrumWriters, ProduceExpectedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "pp_spectrum_writers";
  std::filesystem::create_directories(dir);
  const auto s = kernel_spectrum(delta_kernel(3), 8);
  write_spectrum_csv(dir / "s.csv", s);
  write_spectrum_pgm(dir / "s.pgm", s);
  const std::vector<double> prof{0.5, 0.25, 0.25};
  write_profile_csv(dir / "p.csv", prof);
  std::ifstream pgm(dir / "s.pgm", std::ios::binary);
  std::string magic;
  pgm >> magic;
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(std::filesystem::file_size(dir / "s.pgm") > 64, true);
  std::ifstream csv(dir / "s.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(csv, l);) ++lines;
  EXPECT_GE(lines, 8u);
  std::filesystem::remove_all(dir);
}

TEST(SnrExperiment, PushPullBeatsPushAtDefaults) {
  double push = 0.0, pp = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = snr_edge_experiment(analytic_vertical_edge_kernel(), 0.5, 3, seed);
    push += r.snr_push_db / 10.0;
    pp += r.snr_pushpull_db / 10.0;
  }
  EXPECT_GE(pp - push, 1.0);
}

TEST(SnrExperiment, NoiselessEdgeHasVeryHighSnr) {
  SnrOptions o;
  o.noise_sigma = 0.0;
  const auto r = snr_edge_experiment(analytic_vertical_edge_kernel(), 0.5, 3, 1, o);
  EXPECT_GT(r.snr_push_db, 60.0);
  EXPECT_GT(r.snr_pushpull_db, 60.0);
}

TEST(SnrExperiment, NoiseOnlyPushSnrIsNearZero) {
  SnrOptions o;
  o.with_edge = false;
  double push = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    push += snr_edge_experiment(analytic_vertical_edge_kernel(), 0.5, 3, seed, o).snr_push_db / 10.0;
  EXPECT_NEAR(push, 0.0, 1.5);
}

TEST(SnrExperiment, SameSeedIsDeterministic) {
  const auto a = snr_edge_experiment(analytic_vertical_edge_kernel(), 0.5, 3, 42);
  const auto b = snr_edge_experiment(analytic_vertical_edge_kernel(), 0.5, 3, 42);
  EXPECT_EQ(a.snr_push_db, b.snr_push_db);
  EXPECT_EQ(a.snr_pushpull_db, b.snr_pushpull_db);
}

TEST(SnrExperiment, AnalyticKernelIsZeroSumWithAsymmetricExtrema) {
  const auto k = analytic_vertical_edge_kernel();
  double s = 0.0;
  for (double v : k.data()) s += v;
  EXPECT_NEAR(s, 0.0, 1e-15);
  const auto p = derive_pull_kernel(k.reshaped({1, 1, 3, 3}));
  bool differs = false;
  for (std::size_t i = 0; i < 9; ++i) differs |= std::abs(p[i] + k[i]) > 1e-12;
  EXPECT_TRUE(differs);
}

namespace {

struct TrainedStem {
  Tensor<double> edge_kernel;
  double mean_alpha = 0.0;
};

TrainedStem load_trained_stem() {
  std::ifstream in(std::filesystem::path(PUSHPULL_FIXTURE_DIR) / "trained_stem.json");
  if (!in) throw std::runtime_error("missing trained_stem.json fixture");
  const auto doc = nlohmann::json::parse(in);
  TrainedStem stem;
  const auto values = doc.at("edge_kernel").at("values").get<std::vector<double>>();
  stem.edge_kernel = Tensor<double>({3, 3});
  for (std::size_t i = 0; i < values.size(); ++i) stem.edge_kernel[i] = values[i];
  const auto alpha = doc.at("alpha").get<std::vector<double>>();
  for (double a : alpha) stem.mean_alpha += a / static_cast<double>(alpha.size());
  return stem;
}

}  // namespace

TEST(TrainedStemFixture, PushPullImprovesEdgeSnrOfLearnedKernel) {
  const auto stem = load_trained_stem();
  ASSERT_GT(stem.mean_alpha, 0.0);
  double push = 0.0, pp = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = snr_edge_experiment(stem.edge_kernel, stem.mean_alpha, 3, seed);
    push += r.snr_push_db / 10.0;
    pp += r.snr_pushpull_db / 10.0;
  }
  EXPECT_GE(pp - push, 1.0) << "push " << push << " dB, push-pull " << pp << " dB";
}
