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

#include "pushpull/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pushpull/corruptions.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/optim.hpp"
#include "pushpull/random.hpp"

namespace pushpull {

namespace {

std::vector<double> alpha_snapshot(const Classifier<float>& model) {
  std::vector<double> out;
  if (const auto* pp = model.pushpull_stem()) {
    for (float a : pp->alpha().value.data()) out.push_back(a);
  }
  return out;
}

std::string first_non_finite(Classifier<float>& model) {
  for (const Parameter<float>* p : model.parameters()) {
    if (!p->value.all_finite()) return p->name + " (value)";
    if (!p->grad.all_finite()) return p->name + " (gradient)";
  }
  return "none; activations overflowed";
}

}  // namespace

TrainResult train_classifier(Classifier<float>& model, const Dataset& train, const Dataset* val,
                             const TrainOptions& options, const EpochCallback& on_epoch) {
  if (train.size() == 0) throw ContractError("train_classifier: empty training set");
  if (options.batch_size == 0 || options.epochs == 0) {
    throw ContractError("train_classifier: epochs and batch size must be positive");
  }
  const std::size_t n = train.size();
  const std::size_t batches = (n + options.batch_size - 1) / options.batch_size;
  const long total = static_cast<long>(batches * options.epochs);
  SgdOptions sgd;
  sgd.momentum = options.momentum;
  sgd.weight_decay = options.weight_decay;
  const auto params = model.parameters();

  TrainResult result;
  result.total_steps = total;
  long step = 0;
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(hash_seed(options.seed, {epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * options.batch_size;
      const std::size_t hi = std::min(n, lo + options.batch_size);
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      Tensor<float> images = train.gather_images(idx);
      const std::vector<int> labels = train.gather_labels(idx);
      if (options.augment) images = augment_batch(images, options.seed, static_cast<std::uint64_t>(step));

      // Schedule position runs over [0, total]; the last step lands at total.
      const double lr = cyclic_cosine_lr(step + 1, total, options.lr_start, options.lr_peak,
                                         options.lr_end, options.warm_frac);
      sgd.lr = lr;
      model.zero_grad();
      Tape<float> tape;
      const Var logits = model.forward(tape, images, true);
      const Var loss = softmax_cross_entropy(tape, logits, labels);
      const double l = tape.value(loss)[0];
      if (!std::isfinite(l)) {
        std::ostringstream os;
        os << "non-finite loss at epoch " << epoch << ", step " << step << ", lr " << lr
           << "; offending parameter: " << first_non_finite(model);
        throw NumericError(os.str());
      }
      if (step == 0) result.initial_loss = l;
      tape.backward(loss);
      try {
        sgd_update<float>(params, sgd);
      } catch (const NumericError& e) {
        std::ostringstream os;
        os << "epoch " << epoch << ", step " << step << ", lr " << lr << ": " << e.what();
        throw NumericError(os.str());
      }
      loss_sum += l * static_cast<double>(hi - lo);
      rec.last_lr = lr;
      ++step;
    }
    rec.mean_loss = loss_sum / static_cast<double>(n);
    rec.steps = step;
    if (val != nullptr) rec.val_error = classification_error(model, *val, options.eval_batch_size);
    rec.alpha = alpha_snapshot(model);
    if (on_epoch) on_epoch(rec);
    result.epochs.push_back(std::move(rec));
  }
  return result;
}

std::vector<int> predict_labels(Classifier<float>& model, const Tensor<float>& images,
                                std::size_t batch_size) {
  require_rank(images, 4, "predict images");
  const std::size_t n = images.dim(0), per = images.size() / std::max<std::size_t>(n, 1);
  std::vector<int> out;
  out.reserve(n);
  for (std::size_t lo = 0; lo < n; lo += batch_size) {
    const std::size_t hi = std::min(n, lo + batch_size);
    Shape shape = images.shape();
    shape[0] = hi - lo;
    std::vector<float> chunk(images.data().begin() + static_cast<std::ptrdiff_t>(lo * per),
                             images.data().begin() + static_cast<std::ptrdiff_t>(hi * per));
    const auto labels = predict_batch(model, Tensor<float>(shape, std::move(chunk))).labels;
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

double classification_error(Classifier<float>& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw ContractError("classification_error: empty dataset");
  const auto pred = predict_labels(model, data.images, batch_size);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != data.labels[i];
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0) throw ContractError("histogram needs at least one bin");
  Histogram h;
  if (lo == hi && !values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) hi = lo + 1.0;
  }
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
    const auto b = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(bins - 1)));
    ++h.counts[b];
  }
  return h;
}

std::string format_histogram(const Histogram& h) {
  std::ostringstream os;
  const std::size_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  os.setf(std::ios::fixed);
  os.precision(3);
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double a = h.lo + width * static_cast<double>(i);
    os << '[' << a << ", " << a + width << ") " << h.counts[i] << ' '
       << std::string(peak ? h.counts[i] * 40 / peak : 0, '#') << '\n';
  }
  return os.str();
}

CorruptionErrorMatrix evaluate_matrix(Classifier<float>& model,
                                      const std::filesystem::path& corrupted_dir,
                                      const Dataset& clean, std::size_t batch_size,
                                      std::string model_id) {
  const CorruptedSetManifest manifest = CorruptedSetManifest::read(corrupted_dir);
  const std::string& expected = SeverityTable::shipped().version();
  if (manifest.table_version != expected) {
    throw StalenessError("corrupted set '" + corrupted_dir.string() + "' was built with severity table '" +
                         manifest.table_version + "', this binary ships '" + expected + "'");
  }
  if (clean.size() != manifest.num_images) {
    throw StalenessError("corrupted set '" + corrupted_dir.string() + "' was built from " +
                         std::to_string(manifest.num_images) + " clean images, got " +
                         std::to_string(clean.size()));
  }
  CorruptionErrorMatrix m;
  m.model_id = std::move(model_id);
  m.clean_error = classification_error(model, clean, batch_size);
  for (CorruptionKind k : kAllCorruptions) {
    for (int s = 1; s <= static_cast<int>(kNumSeverities); ++s) {
      const Dataset set = read_cifar_records(corrupted_file(corrupted_dir, k, s), Split::kTest);
      if (set.size() != manifest.num_images) {
        throw StalenessError("corrupted set: " + std::string(to_string(k)) + "/" + std::to_string(s) +
                             " holds " + std::to_string(set.size()) + " images, manifest declares " +
                             std::to_string(manifest.num_images));
      }
      m.at(k, s) = classification_error(model, set, batch_size);
    }
  }
  return m;
}

}  // namespace pushpull
