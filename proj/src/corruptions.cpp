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

#include "pushpull/corruptions.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "pushpull/errors.hpp"
#include "pushpull/image_ops.hpp"
#include "pushpull/jpeg.hpp"
#include "pushpull/random.hpp"
#include "pushpull/severity_table_data.hpp"

namespace pushpull {

using image::Plane;
using image::Rgb;
using json = nlohmann::json;

void CorruptionSpec::validate() const {
  if (severity < 1 || severity > static_cast<int>(kNumSeverities)) {
    throw RangeError("corruption severity " + std::to_string(severity) + " outside 1..5");
  }
}

// --- severity table -------------------------------------------------------------

const SeverityTable& SeverityTable::shipped() {
  static const SeverityTable table = parse(detail::kSeverityTableJson);
  return table;
}

SeverityTable SeverityTable::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("severity table: ") + e.what());
  }
  SeverityTable t;
  try {
    t.version_ = doc.at("version").get<std::string>();
    const json& kinds = doc.at("kinds");
    for (CorruptionKind k : kAllCorruptions) {
      const std::string name(to_string(k));
      if (!kinds.contains(name)) throw FormatError("severity table: missing kind '" + name + "'");
      const json& node = kinds.at(name);
      Entry e;
      e.principal = node.at("principal").get<std::string>();
      const std::string dir = node.at("direction").get<std::string>();
      if (dir != "increasing" && dir != "decreasing") {
        throw FormatError("severity table: bad direction '" + dir + "' for " + name);
      }
      e.increasing = dir == "increasing";
      for (const auto& [pname, values] : node.at("params").items()) {
        auto v = values.get<std::vector<double>>();
        if (v.size() != kNumSeverities) {
          throw FormatError("severity table: " + name + "." + pname + " needs 5 values");
        }
        e.params[pname] = std::move(v);
      }
      const auto it = e.params.find(e.principal);
      if (it == e.params.end()) {
        throw FormatError("severity table: principal '" + e.principal + "' missing for " + name);
      }
      for (std::size_t s = 1; s < kNumSeverities; ++s) {
        const double prev = it->second[s - 1], cur = it->second[s];
        if (e.increasing ? cur <= prev : cur >= prev) {
          throw ContractError("severity table: " + name + "." + e.principal +
                              " is not strictly monotone in severity");
        }
      }
      t.entries_.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("severity table: ") + e.what());
  }
  return t;
}

double SeverityTable::param(CorruptionKind kind, const std::string& name, int severity) const {
  const Entry& e = entries_.at(index_of(kind));
  const auto it = e.params.find(name);
  if (it == e.params.end()) {
    throw ConfigError("severity table has no parameter '" + name + "' for " +
                      std::string(to_string(kind)));
  }
  if (severity < 1 || severity > static_cast<int>(kNumSeverities)) {
    throw RangeError("severity " + std::to_string(severity) + " outside 1..5");
  }
  return it->second[static_cast<std::size_t>(severity - 1)];
}

const std::string& SeverityTable::principal(CorruptionKind kind) const {
  return entries_.at(index_of(kind)).principal;
}

bool SeverityTable::increasing(CorruptionKind kind) const {
  return entries_.at(index_of(kind)).increasing;
}

// --- generators ---------------------------------------------------------------

namespace {

template <typename F>
void for_each_value(Rgb& img, F&& f) {
  for (auto& p : img)
    for (double& v : p.v) f(v);
}

void gaussian_noise(Rgb& img, double sigma, Rng& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  for_each_value(img, [&](double& v) { v += n(rng); });
}

void shot_noise(Rgb& img, double lambda, Rng& rng) {
  for_each_value(img, [&](double& v) {
    const double mean = v * lambda;
    if (mean <= 0.0) {
      v = 0.0;
      return;
    }
    std::poisson_distribution<long> p(mean);
    v = static_cast<double>(p(rng)) / lambda;
  });
}

void impulse_noise(Rgb& img, double amount, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for_each_value(img, [&](double& v) {
    if (u(rng) < amount) v = u(rng) < 0.5 ? 0.0 : 1.0;
  });
}

void glass_blur(Rgb& img, double sigma, int max_delta, int iterations, Rng& rng) {
  for (auto& p : img) p = image::gaussian_blur(p, sigma);
  const auto h = static_cast<int>(img[0].height), w = static_cast<int>(img[0].width);
  std::uniform_int_distribution<int> d(-max_delta, max_delta);
  for (int it = 0; it < iterations; ++it) {
    for (int y = h - 1 - max_delta; y >= max_delta; --y)
      for (int x = w - 1 - max_delta; x >= max_delta; --x) {
        const int dy = d(rng), dx = d(rng);
        const int ty = std::clamp(y + dy, 0, h - 1), tx = std::clamp(x + dx, 0, w - 1);
        for (auto& p : img) {
          std::swap(p.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)),
                    p.at(static_cast<std::size_t>(ty), static_cast<std::size_t>(tx)));
        }
      }
  }
  for (auto& p : img) p = image::gaussian_blur(p, sigma);
}

void zoom_blur(Rgb& img, double max_zoom, int steps) {
  for (auto& p : img) {
    Plane acc(p.height, p.width);
    for (int i = 0; i < steps; ++i) {
      const double f = steps == 1 ? 1.0 : 1.0 + (max_zoom - 1.0) * i / (steps - 1);
      const Plane z = image::zoom_center(p, f);
      for (std::size_t j = 0; j < acc.v.size(); ++j) acc.v[j] += z.v[j];
    }
    for (double& v : acc.v) v /= steps;
    p = std::move(acc);
  }
}

void snow(Rgb& img, const SeverityTable& t, int s, Rng& rng) {
  const CorruptionKind k = CorruptionKind::kSnow;
  const std::size_t h = img[0].height, w = img[0].width;
  const double zoom = t.param(k, "zoom", s);
  const auto lh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / zoom));
  const auto lw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / zoom));
  std::normal_distribution<double> n(t.param(k, "loc", s), t.param(k, "scale", s));
  Plane low(lh, lw);
  for (double& v : low.v) v = n(rng);
  Plane layer = image::resize_bilinear(low, h, w);
  const double threshold = t.param(k, "threshold", s);
  for (double& v : layer.v) v = v < threshold ? 0.0 : std::min(v, 1.0);
  layer = image::motion_blur(layer, t.param(k, "blur_radius", s), t.param(k, "blur_sigma", s),
                             t.param(k, "angle_deg", s));
  const double blend = t.param(k, "blend", s);
  for (std::size_t i = 0; i < h * w; ++i) {
    const double gray = 0.299 * img[0].v[i] + 0.587 * img[1].v[i] + 0.114 * img[2].v[i];
    const double flake = layer.v[i] + layer.v[h * w - 1 - i];
    for (auto& p : img) {
      p.v[i] = blend * p.v[i] + (1.0 - blend) * std::max(p.v[i], gray * 1.5 + 0.5) + flake;
    }
  }
}

void frost(Rgb& img, double image_weight, double frost_weight, int octaves, Rng& rng) {
  const Plane tex = image::ridged_noise(img[0].height, img[0].width, octaves, rng);
  const double tint[3] = {0.85, 0.92, 1.0};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < tex.v.size(); ++i) {
      img[c].v[i] = image_weight * img[c].v[i] + frost_weight * tint[c] * tex.v[i];
    }
}

void fog(Rgb& img, double strength, double decay, Rng& rng) {
  const std::size_t side = std::max(img[0].height, img[0].width);
  const Plane field = image::plasma_fractal(side, decay, rng);
  double peak = 0.0;
  for (const auto& p : img)
    for (double v : p.v) peak = std::max(peak, v);
  for (auto& p : img)
    for (std::size_t y = 0; y < p.height; ++y)
      for (std::size_t x = 0; x < p.width; ++x) {
        double& v = p.at(y, x);
        v = (v + strength * field.at(y, x)) * peak / (peak + strength);
      }
}

void brightness(Rgb& img, double shift) {
  for (std::size_t i = 0; i < img[0].v.size(); ++i) {
    double h = 0, s = 0, v = 0;
    image::rgb_to_hsv(img[0].v[i], img[1].v[i], img[2].v[i], h, s, v);
    v = std::clamp(v + shift, 0.0, 1.0);
    image::hsv_to_rgb(h, s, v, img[0].v[i], img[1].v[i], img[2].v[i]);
  }
}

void contrast(Rgb& img, double factor) {
  for (auto& p : img) {
    double mean = 0.0;
    for (double v : p.v) mean += v;
    mean /= static_cast<double>(p.v.size());
    for (double& v : p.v) v = (v - mean) * factor + mean;
  }
}

void elastic(Rgb& img, double amplitude, double sigma, Rng& rng) {
  const std::size_t h = img[0].height, w = img[0].width;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Plane fy(h, w), fx(h, w);
  for (double& v : fy.v) v = u(rng);
  for (double& v : fx.v) v = u(rng);
  fy = image::gaussian_blur(fy, sigma);
  fx = image::gaussian_blur(fx, sigma);
  double ms = 0.0;
  for (std::size_t i = 0; i < h * w; ++i) ms += fy.v[i] * fy.v[i] + fx.v[i] * fx.v[i];
  const double scale = ms > 0.0 ? amplitude / std::sqrt(ms / static_cast<double>(h * w)) : 0.0;
  for (auto& p : img) {
    Plane out(h, w);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        out.at(y, x) = image::sample_bilinear(p, static_cast<double>(y) + scale * fy.at(y, x),
                                              static_cast<double>(x) + scale * fx.at(y, x));
      }
    p = std::move(out);
  }
}

void pixelate(Rgb& img, double fraction) {
  for (auto& p : img) {
    const auto th = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p.height * fraction)));
    const auto tw = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p.width * fraction)));
    p = image::resize_nearest(image::resize_area(p, th, tw), p.height, p.width);
  }
}

}  // namespace

Tensor<float> apply_corruption(const Tensor<float>& img, const CorruptionSpec& spec,
                               const SeverityTable& t) {
  spec.validate();
  require_rank(img, 3, "corruption input");
  for (float v : img.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("corruption input outside [0, 1]");
  }
  const CorruptionKind k = spec.kind;
  const int s = spec.severity;
  if (k == CorruptionKind::kJpeg) {
    return jpeg::roundtrip(img, static_cast<int>(t.param(k, "quality", s)),
                           t.param(k, "subsample_chroma", s) != 0.0);
  }
  Rgb p = image::to_planes(img);
  Rng rng(spec.seed);
  auto P = [&](const char* name) { return t.param(k, name, s); };
  switch (k) {
    case CorruptionKind::kGaussianNoise:
      gaussian_noise(p, P("sigma"), rng);
      break;
    case CorruptionKind::kShotNoise:
      shot_noise(p, P("lambda"), rng);
      break;
    case CorruptionKind::kImpulseNoise:
      impulse_noise(p, P("amount"), rng);
      break;
    case CorruptionKind::kDefocusBlur: {
      const Plane kernel = image::disk_kernel(P("radius"), P("alias_sigma"));
      for (auto& c : p) c = image::correlate(c, kernel);
      break;
    }
    case CorruptionKind::kGlassBlur:
      glass_blur(p, P("sigma"), static_cast<int>(P("max_delta")), static_cast<int>(P("iterations")), rng);
      break;
    case CorruptionKind::kMotionBlur:
      for (auto& c : p) c = image::motion_blur(c, P("radius"), P("sigma"), P("angle_deg"));
      break;
    case CorruptionKind::kZoomBlur:
      zoom_blur(p, P("max_zoom"), static_cast<int>(P("steps")));
      break;
    case CorruptionKind::kSnow:
      snow(p, t, s, rng);
      break;
    case CorruptionKind::kFrost:
      frost(p, P("image_weight"), P("frost_weight"), static_cast<int>(P("octaves")), rng);
      break;
    case CorruptionKind::kFog:
      fog(p, P("strength"), P("decay"), rng);
      break;
    case CorruptionKind::kBrightness:
      brightness(p, P("shift"));
      break;
    case CorruptionKind::kContrast:
      contrast(p, P("factor"));
      break;
    case CorruptionKind::kElastic:
      elastic(p, P("amplitude"), P("sigma"), rng);
      break;
    case CorruptionKind::kPixelate:
      pixelate(p, P("fraction"));
      break;
    case CorruptionKind::kJpeg:
      break;
  }
  return image::from_planes(p, true);
}

std::uint64_t corruption_seed(std::uint64_t global_seed, std::uint64_t image_index,
                              CorruptionKind kind, int severity) {
  return hash_seed(global_seed, {image_index, static_cast<std::uint64_t>(index_of(kind)),
                                 static_cast<std::uint64_t>(severity)});
}

Tensor<float> image_hwc(const Tensor<float>& nchw, std::size_t n) {
  const std::size_t c_n = nchw.dim(1), h = nchw.dim(2), w = nchw.dim(3);
  Tensor<float> out({h, w, c_n});
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out[(y * w + x) * c_n + c] = nchw.at(n, c, y, x);
  return out;
}

void store_image_hwc(const Tensor<float>& hwc, Tensor<float>& nchw, std::size_t n) {
  const std::size_t c_n = nchw.dim(1), h = nchw.dim(2), w = nchw.dim(3);
  if (hwc.dim(0) != h || hwc.dim(1) != w || hwc.dim(2) != c_n) {
    throw DimensionError("store_image_hwc: image " + shape_string(hwc.shape()) +
                         " does not fit batch " + shape_string(nchw.shape()));
  }
  for (std::size_t c = 0; c < c_n; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) nchw.at(n, c, y, x) = hwc[(y * w + x) * c_n + c];
}

// --- corrupted set on disk -----------------------------------------------------

std::filesystem::path corrupted_file(const std::filesystem::path& dir, CorruptionKind kind,
                                     int severity) {
  return dir / std::string(to_string(kind)) / std::to_string(severity) / "images.bin";
}

std::filesystem::path clean_file(const std::filesystem::path& dir) {
  return dir / "clean" / "images.bin";
}

CorruptedSetManifest CorruptedSetManifest::read(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  CorruptedSetManifest m;
  try {
    const json doc = json::parse(is);
    m.format_version = doc.at("format_version").get<int>();
    m.global_seed = doc.at("global_seed").get<std::uint64_t>();
    m.table_version = doc.at("table_version").get<std::string>();
    m.num_images = doc.at("num_images").get<std::size_t>();
    m.clean_checksum = doc.at("clean_checksum").get<std::string>();
    m.checksums = doc.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw FormatError("manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

void CorruptedSetManifest::write(const std::filesystem::path& dir) const {
  json doc;
  doc["format_version"] = format_version;
  doc["global_seed"] = global_seed;
  doc["table_version"] = table_version;
  doc["num_images"] = num_images;
  doc["clean_checksum"] = clean_checksum;
  doc["checksums"] = checksums;
  json counts;
  for (CorruptionKind k : kAllCorruptions) {
    json per;
    for (std::size_t s = 1; s <= kNumSeverities; ++s) per[std::to_string(s)] = num_images;
    counts[std::string(to_string(k))] = per;
  }
  doc["counts"] = counts;
  const auto path = dir / "manifest.json";
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << doc.dump(2) << '\n';
}

CorruptedSetManifest materialize_corrupted_set(const Dataset& clean, std::uint64_t seed,
                                               const std::filesystem::path& out,
                                               const MaterializeOptions& options) {
  clean.validate();
  namespace fs = std::filesystem;
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!options.overwrite) {
      throw IoError("output directory '" + out.string() + "' is not empty (use overwrite)");
    }
    fs::remove_all(out);
  }
  fs::create_directories(out / "clean");
  write_cifar_records(clean_file(out), clean.images, clean.labels);
  const SeverityTable& table = SeverityTable::shipped();
  const std::size_t n = clean.size();
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));

  CorruptedSetManifest manifest;
  manifest.global_seed = seed;
  manifest.table_version = table.version();
  manifest.num_images = n;
  manifest.clean_checksum = clean.source_checksum;

  for (CorruptionKind kind : kAllCorruptions) {
    std::array<std::vector<char>, kNumSeverities> buffers;
    for (auto& b : buffers) b.assign(n * kCifarRecordBytes, 0);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned t) {
      try {
        for (std::size_t i = t; i < n; i += threads) {
          const Tensor<float> src = image_hwc(clean.images, i);
          for (int s = 1; s <= static_cast<int>(kNumSeverities); ++s) {
            const CorruptionSpec spec{kind, s, corruption_seed(seed, i, kind, s)};
            const Tensor<float> img = apply_corruption(src, spec, table);
            char* rec = buffers[static_cast<std::size_t>(s - 1)].data() + i * kCifarRecordBytes;
            rec[0] = static_cast<char>(clean.labels[i]);
            const std::size_t plane = kCifarSide * kCifarSide;
            for (std::size_t c = 0; c < 3; ++c)
              for (std::size_t j = 0; j < plane; ++j) {
                rec[1 + c * plane + j] = static_cast<char>(
                    static_cast<unsigned char>(std::lround(static_cast<double>(img[j * 3 + c]) * 255.0)));
              }
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
    work(0);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int s = 1; s <= static_cast<int>(kNumSeverities); ++s) {
      const auto& buf = buffers[static_cast<std::size_t>(s - 1)];
      const fs::path path = corrupted_file(out, kind, s);
      fs::create_directories(path.parent_path());
      std::ofstream os(path, std::ios::binary);
      if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
      os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      if (!os) throw IoError("write failed for '" + path.string() + "'");
      h = fnv1a64(std::string_view(buf.data(), buf.size()), h);
    }
    manifest.checksums[std::string(to_string(kind))] = hex64(h);
  }
  manifest.write(out);
  return manifest;
}

}  // namespace pushpull
