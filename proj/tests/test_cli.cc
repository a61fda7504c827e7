// tests/test_cli.cc
//
// Copyright 2026 The cvec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.h"

namespace cvec {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("cvec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    nlohmann::json cfg = {
        {"synth",
         {{"num_train_speakers", 4}, {"num_dev_speakers", 2}, {"dev_seen_speakers", 1},
          {"num_eval_speakers", 2}, {"feature_dim", 6}, {"min_turn_frames", 60},
          {"max_turn_frames", 120}, {"turns_per_recording", 4}, {"speakers_per_recording", 2},
          {"train_recordings", 4}, {"dev_recordings", 1}, {"eval_recordings", 1}, {"seed", 3}}},
        {"model",
         {{"attention_dim", 8}, {"tdnn_hidden", 8}, {"hornn_state", 6}, {"hornn_layers", 1},
          {"bottleneck_dim", 4}}},
        {"train",
         {{"window_frames", 40}, {"window_shift", 20}, {"epochs", 1}, {"pretrain_epochs", 1},
          {"batch_size", 8}}},
        {"systems", {"tdnn"}}};
    config_ = root_ / "config.json";
    std::ofstream(config_) << cfg.dump(2);
  }
  void TearDown() override { fs::remove_all(root_); }

  static int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "cvec");
    return cli::run(args);
  }
  std::string path(const std::string& leaf) const { return (root_ / leaf).string(); }

  fs::path root_;
  fs::path config_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(cli({"--help"}), cli::kOk);
  EXPECT_EQ(cli({}), cli::kConfigError);
  EXPECT_EQ(cli({"frobnicate"}), cli::kConfigError);
  EXPECT_EQ(cli({"synth"}), cli::kConfigError);
}

TEST_F(CliTest, SynthRefusesNonEmptyDirectoryWithoutForce) {
  const std::string corpus = path("corpus");
  ASSERT_EQ(cli({"synth", "--config", config_.string(), "--out", corpus}), cli::kOk);
  EXPECT_TRUE(fs::exists(fs::path(corpus) / "manifest.json"));
  EXPECT_EQ(cli({"synth", "--config", config_.string(), "--out", corpus}), cli::kConfigError);
  EXPECT_EQ(cli({"synth", "--config", config_.string(), "--out", corpus, "--force"}), cli::kOk);
}

TEST_F(CliTest, ConfigErrors) {
  std::ofstream(path("bad.json")) << R"({"systems": ["cvector:nonsense"]})";
  EXPECT_EQ(cli({"synth", "--config", path("bad.json"), "--out", path("c")}), cli::kConfigError);
  std::ofstream(path("unknown.json")) << R"({"colour": 1})";
  EXPECT_EQ(cli({"synth", "--config", path("unknown.json"), "--out", path("c")}),
            cli::kConfigError);
  std::ofstream(path("broken.json")) << "{";
  EXPECT_EQ(cli({"synth", "--config", path("broken.json"), "--out", path("c")}),
            cli::kConfigError);
}

TEST_F(CliTest, MissingCorpusIsDataError) {
  EXPECT_EQ(cli({"train", "--config", config_.string(), "--corpus", path("none"), "--system",
                 "tdnn", "--out", path("m")}),
            cli::kDataError);
}

TEST_F(CliTest, MalformedRttmIsDataError) {
  std::ofstream(path("ref.rttm")) << "SPEAKER r 1 0.000 1.000 <NA> <NA> A <NA> <NA>\n";
  std::ofstream(path("hyp.rttm")) << "SPEAKER r 1 zero 1.000 <NA> <NA> A <NA> <NA>\n";
  EXPECT_EQ(cli({"score", "--ref", path("ref.rttm"), "--hyp", path("hyp.rttm")}),
            cli::kDataError);
}

TEST_F(CliTest, ScoreWritesJson) {
  std::ofstream(path("ref.rttm")) << "SPEAKER r 1 0.000 10.000 <NA> <NA> A <NA> <NA>\n";
  std::ofstream(path("hyp.rttm")) << "SPEAKER r 1 0.000 6.000 <NA> <NA> X <NA> <NA>\n"
                                     "SPEAKER r 1 6.000 4.000 <NA> <NA> Y <NA> <NA>\n";
  ASSERT_EQ(cli({"score", "--ref", path("ref.rttm"), "--hyp", path("hyp.rttm"), "--json",
                 path("ser.json")}),
            cli::kOk);
  std::ifstream is(path("ser.json"));
  const auto j = nlohmann::json::parse(is);
  EXPECT_NEAR(j["ser"].get<double>(), 39.47, 0.01);
}

TEST_F(CliTest, StepwisePipeline) {
  const std::string corpus = path("corpus");
  ASSERT_EQ(cli({"synth", "--config", config_.string(), "--out", corpus}), cli::kOk);
  EXPECT_EQ(cli({"train", "--config", config_.string(), "--corpus", corpus, "--system",
                 "cvector:diagonal", "--out", path("m")}),
            cli::kConfigError);
  ASSERT_EQ(cli({"train", "--config", config_.string(), "--corpus", corpus, "--system", "tdnn",
                 "--out", path("m")}),
            cli::kOk);
  EXPECT_TRUE(fs::exists(root_ / "m" / "model.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "m" / "loss.csv"));
  ASSERT_EQ(cli({"extract", "--checkpoint", path("m/model.ckpt"), "--corpus", corpus, "--split",
                 "eval", "--out", path("emb")}),
            cli::kOk);
  const std::string ref = (fs::path(corpus) / "eval" / "ref.rttm").string();
  EXPECT_EQ(cli({"cluster", "--embeddings", path("emb"), "--out", path("hyp.rttm"), "--tune"}),
            cli::kConfigError);
  ASSERT_EQ(cli({"cluster", "--embeddings", path("emb"), "--out", path("hyp.rttm"), "--tune",
                 "--ref", ref, "--config", config_.string(), "--tune-out", path("tune.json")}),
            cli::kOk);
  EXPECT_TRUE(fs::exists(root_ / "tune.json"));
  ASSERT_EQ(cli({"cluster", "--embeddings", path("emb"), "--out", path("hyp2.rttm"),
                 "--threshold", "0.5"}),
            cli::kOk);
  EXPECT_EQ(cli({"score", "--ref", ref, "--hyp", path("hyp2.rttm")}), cli::kOk);
}

TEST_F(CliTest, RunAndReport) {
  const std::string run = path("run");
  ASSERT_EQ(cli({"run", "--config", config_.string(), "--out", run}), cli::kOk);
  EXPECT_TRUE(fs::exists(fs::path(run) / "tdnn" / "result.json"));
  EXPECT_TRUE(fs::exists(fs::path(run) / "report.txt"));
  fs::remove(fs::path(run) / "report.txt");
  EXPECT_EQ(cli({"report", "--run", run}), cli::kOk);
  EXPECT_TRUE(fs::exists(fs::path(run) / "report.txt"));
  EXPECT_EQ(cli({"run", "--config", config_.string(), "--out", run}), cli::kConfigError);
}

}  // namespace
}  // namespace cvec
