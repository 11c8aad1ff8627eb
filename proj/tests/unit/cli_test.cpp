// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Drives the cose executable end to end and checks exit codes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#ifndef COSE_CLI_PATH
#error "COSE_CLI_PATH must point at the cose executable"
#endif

namespace {

namespace fs = std::filesystem;

const fs::path& root() {
  static const fs::path p = [] {
    const fs::path r = fs::temp_directory_path() / "cose_cli_test";
    fs::remove_all(r);
    fs::create_directories(r);
    return r;
  }();
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(COSE_CLI_PATH) + " " + args + " >" + (root() / "stdout.txt").string() +
                          " 2>" + (root() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = root() / name;
  std::ofstream(p) << text;
  return p;
}

const char* kSmall = R"({
  "dataset": {"source": "toy", "per_class": 40},
  "training": {"epochs": 4, "checkpoints": [0, 1, 2]},
  "max_images": 6,
  "samples_per_image": 3,
  "methods": ["vanilla_gradient", "gradcam"]
})";

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("evaluate --bogus-flag"), 2);
  EXPECT_EQ(run("evaluate --config " + write_config("typo.json", R"({"sample_per_image": 3})").string()), 2);
  EXPECT_NE(slurp(root() / "stderr.txt").find("sample_per_image"), std::string::npos);
  EXPECT_EQ(run("evaluate --config " + write_config("broken.json", "{not json").string()), 2);
  EXPECT_EQ(run("evaluate --methods no_such_method"), 2);
  EXPECT_EQ(run("evaluate --ssim-mode local"), 2);
  EXPECT_EQ(run("evaluate --threads 0"), 2);
  EXPECT_EQ(run("score-external"), 2);
}

TEST(Cli, IoErrorsExitFour) {
  EXPECT_EQ(run("evaluate --config " + (root() / "absent.json").string()), 4);
  EXPECT_EQ(run("score-external " + (root() / "no_such_dir").string()), 4);
  const fs::path bad = root() / "bad_maps";
  fs::create_directories(bad);
  std::ofstream(bad / "x.cose", std::ios::binary) << "COSE\x07";
  EXPECT_EQ(run("score-external " + bad.string() + " --out " + (root() / "bad_out").string()), 4);
}

TEST(Cli, EmptyExternalRunExitsThree) {
  const fs::path empty = root() / "empty_maps";
  fs::create_directories(empty);
  EXPECT_EQ(run("score-external " + empty.string() + " --methods gradcam --out " + (root() / "empty_out").string()), 3);
  EXPECT_NE(slurp(root() / "empty_out" / "metrics.tsv").find("undefined"), std::string::npos);
}

TEST(Cli, TrainEvaluateExportScore) {
  const auto cfg = write_config("small.json", kSmall);
  const fs::path out = root() / "run";
  ASSERT_EQ(run("train --config " + cfg.string() + " --out " + out.string()), 0);
  for (const char* f : {"epoch_000.cose", "epoch_001.cose", "epoch_002.cose", "epoch_004.cose"}) {
    EXPECT_TRUE(fs::exists(out / "checkpoints" / f)) << f;
  }

  const auto cfg2 = write_config("small_ckpt.json", std::string(kSmall).replace(
                                                        1, 0, "\"checkpoint_dir\": \"" + (out / "checkpoints").string() + "\","));
  ASSERT_EQ(run("evaluate --config " + cfg2.string() + " --out " + (out / "eval").string()), 0);
  for (const char* f : {"metrics.tsv", "breakdown.tsv", "records.tsv", "correlation.tsv", "checkpoints.tsv",
                        "manifest.json", "timing.json"}) {
    EXPECT_TRUE(fs::exists(out / "eval" / f)) << f;
  }
  // In-process training from the same seed gives the same checkpoints.
  ASSERT_EQ(run("evaluate --config " + cfg.string() + " --out " + (out / "eval_trained").string()), 0);
  EXPECT_EQ(slurp(out / "eval" / "metrics.tsv"), slurp(out / "eval_trained" / "metrics.tsv"));

  ASSERT_EQ(run("export-maps --config " + cfg2.string() + " --out " + (out / "maps").string()), 0);
  ASSERT_EQ(run("score-external " + (out / "maps").string() + " --out " + (out / "scored").string()), 0);
  for (const char* f : {"metrics.tsv", "records.tsv", "breakdown.tsv", "correlation.tsv", "checkpoints.tsv"}) {
    EXPECT_EQ(slurp(out / "eval" / f), slurp(out / "scored" / f)) << f;
  }

  ASSERT_EQ(run("analyze-checkpoints --config " + cfg2.string() + " --out " + (out / "ckpt").string()), 0);
  EXPECT_EQ(slurp(out / "ckpt" / "correlation.tsv"), slurp(out / "eval" / "correlation.tsv"));

  // Overrides: a different seed changes the transform draw.
  ASSERT_EQ(run("evaluate --config " + cfg2.string() + " --seed 9 --ssim-mode global --out " +
                (out / "seed9").string()),
            0);
  EXPECT_NE(slurp(out / "eval" / "records.tsv"), slurp(out / "seed9" / "records.tsv"));
  EXPECT_NE(slurp(out / "seed9" / "manifest.json").find("\"global\""), std::string::npos);
}

}  // namespace
