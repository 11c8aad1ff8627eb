// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cose/model/dataset.hpp"
#include "cose/model/micro_model.hpp"

namespace cose::model {

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  double augment_probability = 0.5;
  std::vector<int> checkpoint_epochs = {0, 1, 2, 5, 10, 20};
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const TrainConfig& config);
/// FNV-1a over the canonical JSON of the config and model architecture.
std::uint64_t config_hash(const TrainConfig& config, const MicroModelConfig& model);

struct ModelCheckpoint {
  int epoch = 0;
  double test_accuracy = 0.0;
  std::vector<autodiff::Tensor<float>> parameters;
  std::uint64_t config_hash = 0;
};

/// Fraction of `indices` classified correctly.
double accuracy(const Classifier& model, const Dataset& data, const std::vector<std::size_t>& indices);

using EpochCallback = std::function<void(int epoch, double loss, double test_accuracy)>;

/// SGD with momentum; returns checkpoints at every requested epoch (0 is
/// the initialization) followed by the final model. Throws
/// Errc::kTrainingDiverged on a non-finite loss. Single-threaded.
std::vector<ModelCheckpoint> train(MicroModel& model, const Dataset& data, const TrainConfig& config,
                                    const EpochCallback& on_epoch = {});

MicroModel restore(const MicroModelConfig& config, const ModelCheckpoint& checkpoint);

void save_checkpoint(const ModelCheckpoint& checkpoint, const MicroModelConfig& config,
                     const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path, MicroModelConfig* config = nullptr);

}  // namespace cose::model
