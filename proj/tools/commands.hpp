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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pushpull/config.hpp"

namespace pushpull::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;

  // Default config, then the file, then each override in order.
  ExperimentConfig resolve() const;
};

struct TrainArgs {
  CommonArgs common;
  std::string run_dir;
};

struct MakeCorruptedArgs {
  CommonArgs common;
  std::string out;
  bool overwrite = false;
  unsigned threads = 0;
};

struct EvalArgs {
  CommonArgs common;
  std::string checkpoint;
  std::string corrupted;
  std::string clean;  // CIFAR record file; defaults to the set's clean split
  std::string baseline;
  std::string out;
  std::string model_id;
};

struct ReportArgs {
  CommonArgs common;
  std::vector<std::string> matrices;
  std::string baseline;
  std::string beta;
  std::string out;
};

struct SpectrumArgs {
  std::string checkpoint;
  std::string weights;
  std::vector<double> alphas;
  std::vector<std::size_t> avg_sizes;
  std::size_t fft_size = 64;
  std::size_t bins = 8;
  bool all_channels = false;
  std::string out = "spectrum";
};

struct SnrArgs {
  std::string kernel = "analytic";  // analytic | path to stem weights with an edge kernel
  double alpha = 0.5;
  std::size_t avg_size = 3;
  double sigma = 0.1;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  std::size_t image_size = 64;
  double background = 0.25;
  double foreground = 0.75;
  std::string magnitude = "rectified";
  bool no_edge = false;
  std::string json_out;
};

int cmd_train(const TrainArgs& args, std::ostream& out);
int cmd_make_corrupted(const MakeCorruptedArgs& args, std::ostream& out);
int cmd_eval(const EvalArgs& args, std::ostream& out);
int cmd_report(const ReportArgs& args, std::ostream& out);
int cmd_spectrum(const SpectrumArgs& args, std::ostream& out);
int cmd_snr_demo(const SnrArgs& args, std::ostream& out);

}  // namespace pushpull::cli
