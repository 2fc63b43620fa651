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
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pushpull/dataset.hpp"
#include "pushpull/metrics.hpp"
#include "pushpull/models.hpp"

namespace pushpull {

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double lr_start = 0.05;
  double lr_peak = 1.0;
  double lr_end = 5e-5;
  double warm_frac = 0.3;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;  // shuffling and augmentation
  bool augment = true;
  std::size_t eval_batch_size = 256;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double val_error = std::numeric_limits<double>::quiet_NaN();
  double last_lr = 0.0;
  long steps = 0;
  std::vector<double> alpha;  // PushPull stems only
};

struct TrainResult {
  double initial_loss = 0.0;  // loss of the first batch before any update
  long total_steps = 0;
  std::vector<EpochRecord> epochs;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch SGD with momentum under the cyclic cosine schedule, one step per
// batch; the last partial batch of an epoch is kept. Throws NumericError on a
// non-finite loss, naming epoch, step, learning rate and the first parameter
// holding a non-finite value or gradient.
TrainResult train_classifier(Classifier<float>& model, const Dataset& train, const Dataset* val,
                             const TrainOptions& options, const EpochCallback& on_epoch = {});

std::vector<int> predict_labels(Classifier<float>& model, const Tensor<float>& images,
                                std::size_t batch_size = 256);

// Fraction of misclassified images, wrong/total.
double classification_error(Classifier<float>& model, const Dataset& data,
                            std::size_t batch_size = 256);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;
};

// Equal-width bins over [lo, hi]; values outside are clamped into the end
// bins. lo == hi selects the data range.
Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo = 0.0,
                         double hi = 0.0);
std::string format_histogram(const Histogram& h);

// Top-1 error per (kind, severity) over a materialized corrupted set, plus
// clean error. Throws StalenessError when the set was built from a different
// severity table than the one compiled in.
CorruptionErrorMatrix evaluate_matrix(Classifier<float>& model,
                                      const std::filesystem::path& corrupted_dir,
                                      const Dataset& clean, std::size_t batch_size = 256,
                                      std::string model_id = {});

}  // namespace pushpull
