// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>

#include "cose/error.hpp"
#include "cose/harness/harness.hpp"
#include "cose/model/micro_model.hpp"
#include "cose/random.hpp"

namespace cose::harness {

namespace {
constexpr std::uint64_t kInitStream = 5;
}

model::Dataset load_dataset(const RunConfig& config) {
  switch (config.dataset.source) {
    case DatasetSource::kToy:
      return model::generate_toy_dataset(config.seed, config.dataset.per_class, {}, config.dataset.train_fraction);
    case DatasetSource::kFolder:
      return model::load_image_folder(config.dataset.path, {}, config.seed, config.dataset.train_fraction);
    case DatasetSource::kExternal:
      break;
  }
  throw Error(Errc::kConfig, "dataset.source: external maps carry no images");
}

std::vector<model::ModelCheckpoint> train_checkpoints(const RunConfig& config, const model::Dataset& data,
                                                      const Log& log) {
  model::MicroModelConfig mc;
  mc.num_classes = data.num_classes;
  auto net = model::MicroModel::initialized(mc, mix_seed(config.seed, kInitStream));
  model::EpochCallback cb;
  if (log) {
    cb = [&](int epoch, double loss, double acc) {
      char line[96];
      std::snprintf(line, sizeof line, "epoch %3d  loss %.4f  test accuracy %.4f", epoch, loss, acc);
      log(line);
    };
  }
  return model::train(net, data, config.training, cb);
}

void save_checkpoints(std::span<const model::ModelCheckpoint> checkpoints,
                      const model::MicroModelConfig& model_config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& c : checkpoints) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%03d.cose", c.epoch);
    model::save_checkpoint(c, model_config, dir / name);
  }
}

std::vector<model::ModelCheckpoint> load_checkpoints(const std::filesystem::path& dir,
                                                     model::MicroModelConfig* model_config) {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".cose") files.push_back(e.path());
  }
  if (ec) throw Error(Errc::kIo, "cannot list " + dir.string() + ": " + ec.message());
  if (files.empty()) throw Error(Errc::kIo, "no checkpoints in " + dir.string());
  std::vector<model::ModelCheckpoint> out;
  model::MicroModelConfig first;
  for (const auto& f : files) {
    model::MicroModelConfig mc;
    out.push_back(model::load_checkpoint(f, &mc));
    if (out.size() == 1) {
      first = mc;
    } else if (out.back().config_hash != out.front().config_hash) {
      throw Error(Errc::kConfig, f.string() + " was trained under a different configuration");
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].epoch == out[i - 1].epoch) {
      throw Error(Errc::kConfig, "two checkpoints for epoch " + std::to_string(out[i].epoch));
    }
  }
  if (model_config) *model_config = first;
  return out;
}

Subject make_subject(const RunConfig& config, const model::Dataset& data,
                     const model::MicroModelConfig& model_config,
                     std::span<const model::ModelCheckpoint> checkpoints) {
  if (checkpoints.empty()) throw Error(Errc::kInvalidArgument, "no checkpoints");
  Subject s;
  s.dataset_name = config.dataset.source == DatasetSource::kFolder
                       ? config.dataset.path.filename().string()
                       : std::string(source_name(config.dataset.source));
  if (s.dataset_name.empty()) s.dataset_name = "folder";
  const auto& last = checkpoints.back();
  s.final_model = std::make_shared<model::MicroModel>(model::restore(model_config, last));
  s.final_epoch = last.epoch;
  s.final_accuracy = last.test_accuracy;
  for (std::size_t i = 0; i + 1 < checkpoints.size(); ++i) {
    const auto& c = checkpoints[i];
    s.checkpoints.push_back(
        {c.epoch, c.test_accuracy, std::make_shared<model::MicroModel>(model::restore(model_config, c))});
  }
  std::size_t count = data.test.size();
  if (config.max_images > 0) count = std::min(count, static_cast<std::size_t>(config.max_images));
  for (std::size_t i = 0; i < count; ++i) {
    s.images.push_back(data.images[data.test[i]]);
    s.image_ids.push_back(static_cast<int>(data.test[i]));
  }
  s.fill = model::mean_color(data);
  return s;
}

Subject prepare_subject(const RunConfig& config, const Log& log) {
  const auto data = load_dataset(config);
  if (!config.checkpoint_dir.empty()) {
    model::MicroModelConfig mc;
    const auto checkpoints = load_checkpoints(config.checkpoint_dir, &mc);
    if (mc.num_classes != data.num_classes) {
      throw Error(Errc::kConfig, "checkpoints predict " + std::to_string(mc.num_classes) +
                                     " classes but the dataset has " + std::to_string(data.num_classes));
    }
    return make_subject(config, data, mc, checkpoints);
  }
  model::MicroModelConfig mc;
  mc.num_classes = data.num_classes;
  const auto checkpoints = train_checkpoints(config, data, log);
  return make_subject(config, data, mc, checkpoints);
}

std::vector<saliency::Method> resolve_methods(const std::vector<std::string>& names) {
  std::vector<saliency::Method> out;
  for (const auto& n : names.empty() ? saliency::method_names() : names) out.push_back(saliency::method(n));
  return out;
}

}  // namespace cose::harness
