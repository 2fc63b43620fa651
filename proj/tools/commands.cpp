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

#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pushpull/checkpoint.hpp"
#include "pushpull/corruptions.hpp"
#include "pushpull/dataset.hpp"
#include "pushpull/errors.hpp"
#include "pushpull/metrics.hpp"
#include "pushpull/random.hpp"
#include "pushpull/spectral.hpp"
#include "pushpull/training.hpp"

namespace pushpull::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

ExperimentConfig CommonArgs::resolve() const {
  ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
  for (const std::string& o : overrides) c.apply_override(o);
  c.validate();
  return c;
}

namespace {

void write_json(const fs::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << doc.dump(2) << '\n';
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void write_run_record(const fs::path& dir, const std::string& command, const ExperimentConfig& c,
                      json extra = json::object()) {
  json doc{{"command", command},
           {"config", c.to_json()},
           {"config_hash", c.hash()},
           {"seeds",
            {{"root", c.seed},
             {"train", c.train_seed()},
             {"augment", c.derived_seed("augment")},
             {"subset", c.derived_seed("subset")},
             {"test_subset", c.derived_seed("test_subset")},
             {"corrupt", c.corrupt_seed()}}},
           {"versions", {{"tool", kToolVersion}, {"severity_table", SeverityTable::shipped().version()}}}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  write_json(dir / "run.json", doc);
}

Dataset test_split(const ExperimentConfig& c) {
  Dataset test = load_cifar10(c.data.cifar_dir).test;
  if (c.data.test_subset_n > 0) test = subset(test, c.data.test_subset_n, c.derived_seed("test_subset"));
  return test;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

// --- train ------------------------------------------------------------------------

int cmd_train(const TrainArgs& args, std::ostream& out) {
  ExperimentConfig c = args.common.resolve();
  if (!args.run_dir.empty()) c.data.run_dir = args.run_dir;
  const fs::path run = c.data.run_dir;
  fs::create_directories(run);

  CifarSplits data = load_cifar10(c.data.cifar_dir);
  Dataset train = c.train.subset_n > 0 ? subset(data.train, c.train.subset_n, c.derived_seed("subset"))
                                       : std::move(data.train);
  Dataset val = c.data.test_subset_n > 0
                    ? subset(data.test, c.data.test_subset_n, c.derived_seed("test_subset"))
                    : std::move(data.test);

  Classifier<float> model(c.arch_spec(), c.train_seed());
  const ChannelStatistics stats = channel_statistics(train);
  model.input_normalization().mean = stats.mean;
  model.input_normalization().stddev = stats.stddev;

  TrainOptions opt;
  opt.epochs = c.train.epochs;
  opt.batch_size = c.train.batch_size;
  opt.lr_start = c.train.lr_start;
  opt.lr_peak = c.train.lr_peak;
  opt.lr_end = c.train.lr_end;
  opt.warm_frac = c.train.warm_frac;
  opt.momentum = c.train.momentum;
  opt.weight_decay = c.train.weight_decay;
  opt.seed = c.derived_seed("augment");
  opt.augment = c.train.augment;
  opt.eval_batch_size = c.eval.batch_size;

  out << "train: " << model.spec().name << " stem=" << to_string(model.spec().stem_kind)
      << " params=" << model.parameter_count() << " images=" << train.size()
      << " val=" << val.size() << '\n';
  std::ofstream log(run / "train_log.jsonl");
  if (!log) throw IoError("cannot open training log in '" + run.string() + "'");
  const TrainResult result = train_classifier(model, train, &val, opt, [&](const EpochRecord& r) {
    json line{{"epoch", r.epoch}, {"mean_loss", r.mean_loss}, {"val_error", r.val_error},
              {"lr", r.last_lr}, {"steps", r.steps}};
    if (!r.alpha.empty()) line["alpha"] = r.alpha;
    log << line.dump() << '\n';
    log.flush();
    out << "epoch " << r.epoch << " loss " << fixed(r.mean_loss, 4) << " val_error "
        << fixed(r.val_error, 4) << " lr " << r.last_lr << '\n';
  });

  json metrics{{"initial_loss", result.initial_loss},
               {"final_loss", result.epochs.back().mean_loss},
               {"val_error", result.epochs.back().val_error}};
  if (const auto* pp = model.pushpull_stem()) {
    std::vector<double> alpha;
    for (float a : pp->alpha().value.data()) alpha.push_back(a);
    const Histogram h = make_histogram(alpha, 20);
    const std::string text = format_histogram(h);
    std::ofstream(run / "alpha_histogram.txt") << text;
    log << json{{"final_alpha_histogram", {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}}},
                {"final_alpha", alpha}}.dump()
        << '\n';
    out << "final alpha histogram:\n" << text;
    metrics["negative_alpha_filters"] = pp->negative_alpha_filters().size();
  }
  CheckpointMeta meta;
  meta.step = result.total_steps;
  meta.seed = c.train_seed();
  meta.metrics = metrics;
  save_checkpoint(model, meta, run / "model.ckpt");
  write_run_record(run, "train", c, {{"train_images", train.size()}, {"val_images", val.size()}});
  out << "wrote " << (run / "model.ckpt").string() << '\n';
  return 0;
}

// --- make-corrupted -------------------------------------------------------------

int cmd_make_corrupted(const MakeCorruptedArgs& args, std::ostream& out) {
  ExperimentConfig c = args.common.resolve();
  if (!args.out.empty()) c.data.corrupted_dir = args.out;
  if (c.data.corrupted_dir.empty()) throw ConfigError("make-corrupted: no output directory");
  if (c.corrupt.table_version != SeverityTable::shipped().version()) {
    throw StalenessError("config requests severity table '" + c.corrupt.table_version +
                         "', this binary ships '" + SeverityTable::shipped().version() + "'");
  }
  const Dataset test = test_split(c);
  MaterializeOptions opt;
  opt.overwrite = args.overwrite;
  opt.threads = args.threads;
  const CorruptedSetManifest m = materialize_corrupted_set(test, c.corrupt_seed(), c.data.corrupted_dir, opt);
  write_run_record(c.data.corrupted_dir, "make-corrupted", c, {{"images", m.num_images}});
  out << "wrote " << m.num_images * kNumCorruptions * kNumSeverities << " corrupted images ("
      << m.num_images << " x " << kNumCorruptions * kNumSeverities << ") to " << c.data.corrupted_dir
      << '\n';
  return 0;
}

// --- eval ------------------------------------------------------------------------

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const ExperimentConfig c = args.common.resolve();
  if (args.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
  const fs::path corrupted = args.corrupted.empty() ? fs::path(c.data.corrupted_dir) : fs::path(args.corrupted);
  const fs::path out_dir = args.out.empty() ? fs::path(c.data.run_dir) : fs::path(args.out);
  fs::create_directories(out_dir);
  LoadedCheckpoint ckpt = load_checkpoint(args.checkpoint);
  const Dataset clean = read_cifar_records(args.clean.empty() ? clean_file(corrupted) : fs::path(args.clean),
                                           Split::kTest);
  const std::string id = args.model_id.empty() ? fs::path(args.checkpoint).parent_path().filename().string()
                                               : args.model_id;
  const CorruptionErrorMatrix m = evaluate_matrix(ckpt.model, corrupted, clean, c.eval.batch_size, id);
  write_matrix_csv(out_dir / "matrix.csv", m);

  json summary{{"model_id", m.model_id}, {"clean_error", m.clean_error}, {"mce", mce(m)},
               {"table_version", SeverityTable::shipped().version()}};
  json ce;
  for (CorruptionKind k : kAllCorruptions) ce[std::string(to_string(k))] = corruption_error(m, k);
  summary["corruption_errors"] = ce;
  out << "clean error " << fixed(m.clean_error, 4) << "  mCE " << fixed(mce(m), 4) << '\n';
  if (!args.baseline.empty()) {
    const CorruptionErrorMatrix base = read_matrix_csv(fs::path(args.baseline));
    const Dispersion disp = c.eval.dispersion == "population" ? Dispersion::kPopulation : Dispersion::kSample;
    const auto groups = grouped_mrce(m, base, disp);
    summary["baseline_id"] = base.model_id;
    summary["mrce"] = mrce(m, base);
    json g;
    for (FrequencyGroup grp : {FrequencyGroup::kLow, FrequencyGroup::kMid, FrequencyGroup::kHigh}) {
      const auto& s = groups[static_cast<std::size_t>(grp)];
      g[std::string(to_string(grp))] = {{"mean", s.mean}, {"std", s.dispersion}, {"count", s.count}};
      out << "  " << to_string(grp) << ": " << fixed(s.mean, 3) << " +- " << fixed(s.dispersion, 3)
          << " (" << s.count << " kinds)\n";
    }
    summary["grouped_mrce"] = g;
    summary["dispersion"] = c.eval.dispersion;
    out << "mrCE " << fixed(mrce(m, base), 4) << " vs " << base.model_id << '\n';
  }
  write_json(out_dir / "summary.json", summary);
  return 0;
}

// --- report ----------------------------------------------------------------------

int cmd_report(const ReportArgs& args, std::ostream& out) {
  const ExperimentConfig c = args.common.resolve();
  if (args.baseline.empty()) throw ConfigError("report: --baseline is required");
  const BetaMode beta = parse_beta_mode(args.beta.empty() ? c.eval.beta_mode : args.beta);
  const fs::path out_dir = args.out.empty() ? fs::path("report") : fs::path(args.out);
  fs::create_directories(out_dir);
  const CorruptionErrorMatrix base = read_matrix_csv(fs::path(args.baseline));
  std::vector<CorruptionErrorMatrix> models;
  for (const std::string& p : args.matrices) models.push_back(read_matrix_csv(fs::path(p)));
  const double base_mce = mce(base);

  std::ofstream grid(out_dir / "relative_ce.csv");
  std::ofstream summary(out_dir / "summary.csv");
  std::ofstream rnet(out_dir / "rnet.csv");
  std::ofstream scatter(out_dir / "scatter.csv");
  if (!grid || !summary || !rnet || !scatter) throw IoError("cannot write report files in '" + out_dir.string() + "'");
  for (auto* os : {&grid, &summary, &rnet, &scatter}) *os << std::setprecision(17);

  grid << "model";
  for (CorruptionKind k : kAllCorruptions) grid << ',' << short_code(k);
  grid << ",mrCE\n";
  auto grid_row = [&](const CorruptionErrorMatrix& m) {
    const auto rel = relative_corruption_errors(m, base);
    grid << m.model_id;
    for (double r : rel) grid << ',' << r;
    grid << ',' << mrce(m, base) << '\n';
  };
  grid_row(base);
  for (const auto& m : models) grid_row(m);

  const TradeoffReport self = net_reduction(base.clean_error, base_mce, base.clean_error, base_mce, beta, base.model_id);
  rnet << "# beta_mode=" << to_string(beta) << " beta=" << self.beta << " baseline=" << base.model_id << '\n';
  rnet << "model,r_e,r_mce,r_net,beta\n";
  summary << "model,clean_error,mce,mrce\n";
  scatter << "model,clean_error,mce\n";
  summary << base.model_id << ',' << base.clean_error << ',' << base_mce << ",1\n";
  scatter << base.model_id << ',' << base.clean_error << ',' << base_mce << '\n';

  out << "beta (" << to_string(beta) << ") = " << fixed(self.beta, 4) << '\n';
  out << std::left << std::setw(24) << "model" << std::setw(10) << "E" << std::setw(10) << "mCE"
      << std::setw(10) << "mrCE" << "R_net\n";
  out << std::setw(24) << base.model_id << std::setw(10) << fixed(base.clean_error, 4) << std::setw(10)
      << fixed(base_mce, 4) << std::setw(10) << "1.0000" << fixed(self.r_net, 4) << '\n';
  std::vector<double> clean_errors, mrces;
  for (const auto& m : models) {
    const double e = mce(m), r = mrce(m, base);
    const TradeoffReport t = net_reduction(m.clean_error, e, base.clean_error, base_mce, beta, base.model_id);
    rnet << m.model_id << ',' << t.r_e << ',' << t.r_mce << ',' << t.r_net << ',' << t.beta << '\n';
    summary << m.model_id << ',' << m.clean_error << ',' << e << ',' << r << '\n';
    scatter << m.model_id << ',' << m.clean_error << ',' << e << '\n';
    clean_errors.push_back(m.clean_error);
    mrces.push_back(r);
    out << std::setw(24) << m.model_id << std::setw(10) << fixed(m.clean_error, 4) << std::setw(10)
        << fixed(e, 4) << std::setw(10) << fixed(r, 4) << fixed(t.r_net, 4) << '\n';
  }
  if (models.size() >= 2) {
    auto mean_std = [](const std::vector<double>& v) {
      const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::pair{mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    };
    const auto [em, es] = mean_std(clean_errors);
    const auto [rm, rs] = mean_std(mrces);
    summary << "mean,," << em << ",," << rm << '\n';
    summary << "std,," << es << ",," << rs << '\n';
    out << "across runs: E " << fixed(em, 4) << " +- " << fixed(es, 4) << ", mrCE " << fixed(rm, 4)
        << " +- " << fixed(rs, 4) << '\n';
  }
  return 0;
}

// --- spectrum ----------------------------------------------------------------------

int cmd_spectrum(const SpectrumArgs& args, std::ostream& out) {
  if (args.checkpoint.empty() == args.weights.empty()) {
    throw ConfigError("spectrum: give exactly one of --checkpoint or --weights");
  }
  const StemWeights stem = !args.checkpoint.empty() ? export_stem(load_checkpoint(args.checkpoint).model)
                                                    : read_stem_weights(args.weights);
  const fs::path dir = args.out;
  fs::create_directories(dir);
  auto emit = [&](const std::string& name, const SpectrumGrid& g) {
    write_spectrum_csv(dir / (name + ".csv"), g);
    write_spectrum_pgm(dir / (name + ".pgm"), g);
    const auto profile = radial_energy_profile(g, args.bins);
    write_profile_csv(dir / (name + "_profile.csv"), profile);
    out << std::left << std::setw(28) << name;
    for (double p : profile) out << ' ' << fixed(p, 4);
    out << '\n';
  };
  out << "radial energy fractions, " << args.bins << " bins, fft " << args.fft_size << '\n';
  emit("push", averaged_layer_spectrum(stem.push, SpectralMode::push(), args.fft_size, args.all_channels));
  emit("pull", averaged_layer_spectrum(stem.push, SpectralMode::pull(), args.fft_size, args.all_channels));
  if (args.alphas.empty()) {
    if (!stem.alpha.empty()) {
      emit("pushpull_trained",
           averaged_layer_spectrum(stem.push, SpectralMode::pushpull(stem.alpha, stem.avg_size), args.fft_size,
                                   args.all_channels));
    }
    return 0;
  }
  std::vector<std::size_t> avgs = args.avg_sizes;
  if (avgs.empty()) avgs.push_back(stem.alpha.empty() ? 0 : stem.avg_size);
  for (double a : args.alphas)
    for (std::size_t avg : avgs) {
      std::ostringstream name;
      name << "pushpull_a" << a << "_avg" << avg;
      emit(name.str(), averaged_layer_spectrum(stem.push, SpectralMode::pushpull({a}, avg), args.fft_size,
                                               args.all_channels));
    }
  return 0;
}

// --- snr-demo ----------------------------------------------------------------------

int cmd_snr_demo(const SnrArgs& args, std::ostream& out) {
  Tensor<double> kernel;
  if (args.kernel == "analytic") {
    kernel = analytic_vertical_edge_kernel();
  } else {
    const StemWeights w = read_stem_weights(args.kernel);
    if (w.edge_kernel.empty()) throw ConfigError("snr-demo: '" + args.kernel + "' has no edge_kernel");
    kernel = w.edge_kernel;
  }
  if (args.seeds == 0) throw ConfigError("snr-demo: --seeds must be positive");
  SnrOptions opt;
  opt.image_size = args.image_size;
  opt.background = args.background;
  opt.foreground = args.foreground;
  opt.noise_sigma = args.sigma;
  opt.with_edge = !args.no_edge;
  if (args.magnitude == "rectified") {
    opt.magnitude = ResponseMagnitude::kRectified;
  } else if (args.magnitude == "absolute") {
    opt.magnitude = ResponseMagnitude::kAbsolute;
  } else {
    throw ConfigError("snr-demo: --magnitude must be 'rectified' or 'absolute'");
  }
  const std::uint64_t base = derive_seed(args.seed, "snr");
  double sum_push = 0.0, sum_pp = 0.0;
  json seeds = json::array();
  out << std::setprecision(6) << std::fixed;
  for (std::size_t i = 0; i < args.seeds; ++i) {
    const std::uint64_t s = hash_seed(base, {i});
    const SnrResult r = snr_edge_experiment(kernel, args.alpha, args.avg_size, s, opt);
    sum_push += r.snr_push_db;
    sum_pp += r.snr_pushpull_db;
    out << "seed " << s << " push_db " << r.snr_push_db << " pushpull_db " << r.snr_pushpull_db << '\n';
    seeds.push_back({{"seed", s}, {"snr_push_db", r.snr_push_db}, {"snr_pushpull_db", r.snr_pushpull_db}});
  }
  const double n = static_cast<double>(args.seeds);
  out << "mean snr_push_db " << sum_push / n << '\n';
  out << "mean snr_pushpull_db " << sum_pp / n << '\n';
  out << "gain_db " << (sum_pp - sum_push) / n << '\n';
  if (!args.json_out.empty()) {
    write_json(args.json_out, {{"kernel", args.kernel}, {"alpha", args.alpha}, {"avg_size", args.avg_size},
                               {"sigma", args.sigma}, {"magnitude", args.magnitude}, {"per_seed", seeds},
                               {"mean_snr_push_db", sum_push / n}, {"mean_snr_pushpull_db", sum_pp / n}});
  }
  return 0;
}

}  // namespace pushpull::cli
