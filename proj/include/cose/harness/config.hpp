// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cose/metrics/ssim.hpp"
#include "cose/model/training.hpp"
#include "cose/saliency/saliency.hpp"

namespace cose::harness {

enum class DatasetSource { kToy, kFolder, kExternal };

struct DatasetConfig {
  DatasetSource source = DatasetSource::kToy;
  std::filesystem::path path;  // folder root or directory of map containers
  int per_class = 200;         // toy only
  double train_fraction = 0.8;
};

struct RunConfig {
  DatasetConfig dataset;
  // Empty selects every registered method, or for external maps every
  // method found in the containers.
  std::vector<std::string> methods;
  int samples_per_image = 10;
  int max_images = 50;  // test images evaluated; 0 means the whole test split
  std::uint64_t seed = 0;
  model::TrainConfig training;
  std::filesystem::path checkpoint_dir;  // load instead of training when set
  bool analyze_checkpoints = true;
  metrics::SsimParams ssim;
  saliency::MethodConfig saliency;
  std::filesystem::path out_dir = "cose-out";
  int threads = 1;

  /// Throws Errc::kConfig naming the offending field.
  void validate() const;
};

std::string_view source_name(DatasetSource source) noexcept;

/// Strict: unknown keys and ill-typed values are Errc::kConfig errors.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace cose::harness
