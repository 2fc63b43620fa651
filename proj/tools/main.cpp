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

#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pushpull/errors.hpp"

using namespace pushpull;
using namespace pushpull::cli;

namespace {

void add_common(CLI::App* cmd, CommonArgs& common) {
  cmd->add_option("--config", common.config_path, "Experiment config (JSON)");
  cmd->add_option("--set", common.overrides, "Override a config key: section.key=value")->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PushPull stem training, corruption benchmarks and spectral analysis"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Train a classifier and write a checkpoint");
  add_common(c_train, train.common);
  c_train->add_option("--run-dir", train.run_dir, "Output directory (default data.run_dir)");

  MakeCorruptedArgs mk;
  auto* c_mk = app.add_subcommand("make-corrupted", "Materialize the 15 x 5 corrupted test set");
  add_common(c_mk, mk.common);
  c_mk->add_option("--out", mk.out, "Output directory (default data.corrupted_dir)");
  c_mk->add_flag("--overwrite", mk.overwrite, "Replace a non-empty output directory");
  c_mk->add_option("--threads", mk.threads, "Worker threads (0 = all cores)");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corrupted set");
  add_common(c_ev, ev.common);
  c_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  c_ev->add_option("--corrupted", ev.corrupted, "Corrupted set directory (default data.corrupted_dir)");
  c_ev->add_option("--clean", ev.clean, "Clean test records (default: the set's clean split)");
  c_ev->add_option("--baseline", ev.baseline, "Baseline matrix CSV for mrCE");
  c_ev->add_option("--out", ev.out, "Output directory (default data.run_dir)");
  c_ev->add_option("--model-id", ev.model_id, "Model identifier in the outputs");

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Relative CE grid, summaries and trade-off tables");
  add_common(c_rp, rp.common);
  c_rp->add_option("--matrix", rp.matrices, "Model matrix CSV (repeatable)")->take_all();
  c_rp->add_option("--baseline", rp.baseline, "Baseline matrix CSV")->required();
  c_rp->add_option("--beta", rp.beta, "difficulty | equal | <number> (default eval.beta_mode)");
  c_rp->add_option("--out", rp.out, "Output directory");

  SpectrumArgs sp;
  auto* c_sp = app.add_subcommand("spectrum", "Averaged push, pull and push-pull spectra of a stem");
  c_sp->add_option("--checkpoint", sp.checkpoint, "Checkpoint file");
  c_sp->add_option("--weights", sp.weights, "Stem weights JSON");
  c_sp->add_option("--alpha", sp.alphas, "Inhibition strength (repeatable)")->take_all();
  c_sp->add_option("--avg", sp.avg_sizes, "Average filter size (repeatable)")->take_all();
  c_sp->add_option("--fft-size", sp.fft_size, "DFT size")->capture_default_str();
  c_sp->add_option("--bins", sp.bins, "Radial profile bins")->capture_default_str();
  c_sp->add_flag("--all-channels", sp.all_channels, "Average spectra over input channels too");
  c_sp->add_option("--out", sp.out, "Output directory")->capture_default_str();

  SnrArgs snr;
  auto* c_snr = app.add_subcommand("snr-demo", "Simulated vertical-edge SNR experiment");
  c_snr->add_option("--kernel", snr.kernel, "analytic | stem weights JSON with an edge_kernel")
      ->capture_default_str();
  c_snr->add_option("--alpha", snr.alpha, "Inhibition strength")->capture_default_str();
  c_snr->add_option("--avg", snr.avg_size, "Average filter size")->capture_default_str();
  c_snr->add_option("--sigma", snr.sigma, "Noise standard deviation")->capture_default_str();
  c_snr->add_option("--seeds", snr.seeds, "Number of noise draws")->capture_default_str();
  c_snr->add_option("--seed", snr.seed, "Root seed")->capture_default_str();
  c_snr->add_option("--size", snr.image_size, "Image side")->capture_default_str();
  c_snr->add_option("--background", snr.background, "Left intensity")->capture_default_str();
  c_snr->add_option("--foreground", snr.foreground, "Right intensity")->capture_default_str();
  c_snr->add_option("--magnitude", snr.magnitude, "rectified | absolute")->capture_default_str();
  c_snr->add_flag("--no-edge", snr.no_edge, "Noise-only image");
  c_snr->add_option("--json", snr.json_out, "Also write a JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kContract);
  }

  try {
    if (c_train->parsed()) return cmd_train(train, std::cout);
    if (c_mk->parsed()) return cmd_make_corrupted(mk, std::cout);
    if (c_ev->parsed()) return cmd_eval(ev, std::cout);
    if (c_rp->parsed()) return cmd_report(rp, std::cout);
    if (c_sp->parsed()) return cmd_spectrum(sp, std::cout);
    if (c_snr->parsed()) return cmd_snr_demo(snr, std::cout);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kContract);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumeric);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
  return static_cast<int>(ExitCode::kContract);
}
