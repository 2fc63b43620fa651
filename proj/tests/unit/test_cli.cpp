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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PUSHPULL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "pp_cli";
    fs::remove_all(root_);
    fs::create_directories(root_);
    pushpull::testing::write_synthetic_cifar_dir(root_ / "cifar", 20, 40, 3);
    nlohmann::json cfg = {
        {"seed", 1},
        {"model", {{"stem", "pushpull"}}},
        {"pushpull", {{"avg_size", 3}}},
        {"train", {{"epochs", 1}, {"batch_size", 25}, {"subset_n", 50}}},
        {"data",
         {{"cifar_dir", (root_ / "cifar").string()},
          {"corrupted_dir", (root_ / "corrupted").string()},
          {"run_dir", (root_ / "run").string()},
          {"test_subset_n", 20}}},
    };
    std::ofstream(root_ / "cfg.json") << cfg.dump(2);
    cfg_ = "--config " + (root_ / "cfg.json").string();
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static fs::path root_;
  static std::string cfg_;
};

fs::path CliPipeline::root_;
std::string CliPipeline::cfg_;

}  // namespace

TEST_F(CliPipeline, EndToEnd) {
  ASSERT_EQ(run("train " + cfg_), 0);
  const fs::path run_dir = root_ / "run";
  EXPECT_TRUE(fs::exists(run_dir / "model.ckpt"));
  EXPECT_TRUE(fs::exists(run_dir / "run.json"));
  EXPECT_TRUE(fs::exists(run_dir / "alpha_histogram.txt"));
  const std::string log = slurp(run_dir / "train_log.jsonl");
  EXPECT_NE(log.find("alpha"), std::string::npos);

  ASSERT_EQ(run("make-corrupted " + cfg_ + " --threads 2"), 0);
  EXPECT_TRUE(fs::exists(root_ / "corrupted" / "manifest.json"));
  EXPECT_EQ(run("make-corrupted " + cfg_), 3) << "non-empty output without --overwrite";

  const std::string ckpt = (run_dir / "model.ckpt").string();
  ASSERT_EQ(run("eval " + cfg_ + " --checkpoint " + ckpt + " --out " + (root_ / "e1").string() +
                " --model-id base"),
            0);
  ASSERT_TRUE(fs::exists(root_ / "e1" / "matrix.csv"));
  ASSERT_EQ(run("eval " + cfg_ + " --checkpoint " + ckpt + " --out " + (root_ / "e2").string() +
                " --baseline " + (root_ / "e1" / "matrix.csv").string()),
            0);
  const auto summary = nlohmann::json::parse(slurp(root_ / "e2" / "summary.json"));
  EXPECT_DOUBLE_EQ(summary.at("mrce").get<double>(), 1.0);

  ASSERT_EQ(run("report " + cfg_ + " --baseline " + (root_ / "e1" / "matrix.csv").string() + " --matrix " +
                (root_ / "e2" / "matrix.csv").string() + " --out " + (root_ / "rep").string()),
            0);
  for (const char* f : {"relative_ce.csv", "summary.csv", "rnet.csv", "scatter.csv"})
    EXPECT_TRUE(fs::exists(root_ / "rep" / f)) << f;
  EXPECT_NE(slurp(root_ / "rep" / "rnet.csv").find("beta"), std::string::npos);

  ASSERT_EQ(run("spectrum --checkpoint " + ckpt + " --alpha 1 --avg 3 --out " + (root_ / "spec").string()),
            0);
  EXPECT_TRUE(fs::exists(root_ / "spec" / "push.pgm"));
  EXPECT_TRUE(fs::exists(root_ / "spec" / "pushpull_a1_avg3_profile.csv"));

  ASSERT_EQ(run("snr-demo --seeds 2 --json " + (root_ / "snr.json").string()), 0);
  const auto snr = nlohmann::json::parse(slurp(root_ / "snr.json"));
  EXPECT_TRUE(snr.is_object());
}

TEST_F(CliPipeline, ExitCodesFollowErrorKinds) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train " + cfg_ + " --set train.nope=1"), 2);
  EXPECT_EQ(run("train " + cfg_ + " --set data.cifar_dir=" + (root_ / "absent").string()), 3);
  EXPECT_EQ(run("eval " + cfg_ + " --checkpoint " + (root_ / "absent.ckpt").string()), 3);
  EXPECT_EQ(run("spectrum"), 2);
  EXPECT_EQ(run("snr-demo --magnitude loud"), 2);
}
