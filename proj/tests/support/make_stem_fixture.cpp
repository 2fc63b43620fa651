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

// Trains a small PushPull ResNet on synthetic data and writes its stem, plus
// the most vertical-edge-selective filter, as a JSON fixture.
//
//   make_stem_fixture <out.json> [images] [epochs]

#include <cmath>
#include <cstdlib>
#include <iostream>

#include "pushpull/checkpoint.hpp"
#include "pushpull/training.hpp"
#include "synthetic.hpp"

using namespace pushpull;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_stem_fixture <out.json> [images] [epochs]\n";
    return 2;
  }
  const std::size_t n = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 1000;
  const std::size_t epochs = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 4;
  try {
    const Dataset train = testing::synthetic_dataset(n, 31);
    ArchSpec spec;
    spec.stem_kind = StemKind::kPushPull;
    spec.pushpull.avg_size = 3;
    Classifier<float> model(spec, 31);
    TrainOptions o;
    o.epochs = epochs;
    o.seed = 31;
    train_classifier(model, train, nullptr, o, [](const EpochRecord& r) {
      std::cout << "epoch " << r.epoch << " loss " << r.mean_loss << '\n';
    });

    StemWeights stem = export_stem(model);
    const std::size_t kh = stem.push.dim(2), kw = stem.push.dim(3), in = stem.push.dim(1);
    double best = -1.0;
    std::size_t best_o = 0;
    double best_sign = 1.0;
    for (std::size_t o = 0; o < stem.push.dim(0); ++o) {
      // Right-minus-left column contrast of the channel-summed filter,
      // relative to its norm.
      double contrast = 0.0, norm = 0.0;
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) {
          double v = 0.0;
          for (std::size_t c = 0; c < in; ++c) v += stem.push.at(o, c, y, x);
          norm += v * v;
          if (x == 0) contrast -= v;
          if (x + 1 == kw) contrast += v;
        }
      const double score = std::abs(contrast) / std::sqrt(norm + 1e-12);
      if (score > best) {
        best = score;
        best_o = o;
        best_sign = contrast >= 0 ? 1.0 : -1.0;
      }
    }
    stem.edge_kernel = Tensor<double>({kh, kw});
    for (std::size_t y = 0; y < kh; ++y)
      for (std::size_t x = 0; x < kw; ++x) {
        double v = 0.0;
        for (std::size_t c = 0; c < in; ++c) v += stem.push.at(best_o, c, y, x);
        // Mirror left-right so the kernel prefers dark-to-bright edges.
        stem.edge_kernel[y * kw + (best_sign > 0 ? x : kw - 1 - x)] = v;
      }
    write_stem_weights(argv[1], stem);
    std::cout << "filter " << best_o << " selected (score " << best << "), wrote " << argv[1] << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
