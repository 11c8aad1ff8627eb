// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "cose/error.hpp"
#include "cose/interchange/container.hpp"
#include "cose/random.hpp"
#include "cose/transforms/transforms.hpp"

namespace cose::model {

using autodiff::Tensor;

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"augment_probability", c.augment_probability},
          {"checkpoint_epochs", c.checkpoint_epochs},
          {"seed", c.seed}};
}

namespace {

nlohmann::json to_json(const MicroModelConfig& m) {
  return {{"channels", m.input.channels}, {"height", m.input.height},       {"width", m.input.width},
          {"classes", m.num_classes},     {"conv1", m.conv1_channels}, {"conv2", m.conv2_channels}};
}

MicroModelConfig model_config_from(const nlohmann::json& j) {
  MicroModelConfig m;
  m.input.channels = j.at("channels").get<int>();
  m.input.height = j.at("height").get<int>();
  m.input.width = j.at("width").get<int>();
  m.num_classes = j.at("classes").get<int>();
  m.conv1_channels = j.at("conv1").get<int>();
  m.conv2_channels = j.at("conv2").get<int>();
  return m;
}

}  // namespace

std::uint64_t config_hash(const TrainConfig& config, const MicroModelConfig& model) {
  const std::string text = nlohmann::json{{"train", to_json(config)}, {"model", to_json(model)}}.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

double accuracy(const Classifier& model, const Dataset& data, const std::vector<std::size_t>& indices) {
  if (indices.empty()) return 0.0;
  auto session = model.open_session();
  std::size_t correct = 0;
  for (std::size_t i : indices) {
    if (predict(*session, data.images[i]).label == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

std::vector<ModelCheckpoint> train(MicroModel& model, const Dataset& data, const TrainConfig& config,
                                    const EpochCallback& on_epoch) {
  if (config.epochs < 0) throw Error(Errc::kInvalidArgument, "epochs must be >= 0");
  if (config.batch_size < 1) throw Error(Errc::kInvalidArgument, "batch size must be >= 1");
  for (int e : config.checkpoint_epochs) {
    if (e < 0 || e > config.epochs) {
      throw Error(Errc::kInvalidArgument, "checkpoint epoch " + std::to_string(e) + " outside [0, epochs]");
    }
  }
  if (data.train.empty()) throw Error(Errc::kInvalidArgument, "empty training split");

  const std::uint64_t hash = config_hash(config, model.config());
  const std::set<int> wanted(config.checkpoint_epochs.begin(), config.checkpoint_epochs.end());
  std::vector<ModelCheckpoint> out;
  auto snapshot = [&](int epoch) {
    ModelCheckpoint c;
    c.epoch = epoch;
    c.parameters = model.parameters();
    c.test_accuracy = accuracy(model, data, data.test);
    c.config_hash = hash;
    out.push_back(std::move(c));
  };
  if (wanted.count(0) || config.epochs == 0) snapshot(0);
  if (config.epochs == 0) return out;

  auto g = model.build_graph<float>(true);
  std::vector<std::vector<double>> velocity, accum;
  for (auto id : g.params) {
    velocity.emplace_back(g.graph.parameter_value(id).size(), 0.0);
    accum.emplace_back(g.graph.parameter_value(id).size(), 0.0);
  }
  const auto fill = mean_color(data);
  const Tensor<float> seed(autodiff::Shape{1}, 1.0f);
  std::vector<std::size_t> order = data.train;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      for (auto& a : accum) std::fill(a.begin(), a.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        Image img = data.images[idx];
        if (rng.uniform() < config.augment_probability) {
          img = transforms::apply(transforms::sample_transform(rng), img, fill);
        }
        g.graph.set_label(g.loss, static_cast<std::size_t>(data.labels[idx]));
        const double loss = g.graph.forward(to_tensor<float>(img)).data[0];
        if (!std::isfinite(loss)) {
          throw Error(Errc::kTrainingDiverged, "non-finite loss at epoch " + std::to_string(epoch) +
                                                   "; lower the learning rate");
        }
        epoch_loss += loss;
        g.graph.backward(seed);
        for (std::size_t p = 0; p < g.params.size(); ++p) {
          const auto grad = g.graph.grad(g.params[p]);
          for (std::size_t i = 0; i < grad.size(); ++i) accum[p][i] += grad[i];
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t p = 0; p < g.params.size(); ++p) {
        auto& value = g.graph.mutable_parameter(g.params[p]).data;
        for (std::size_t i = 0; i < value.size(); ++i) {
          velocity[p][i] = config.momentum * velocity[p][i] + accum[p][i] * scale;
          value[i] = static_cast<float>(value[i] - config.learning_rate * velocity[p][i]);
        }
      }
    }
    const bool keep = wanted.count(epoch) || epoch == config.epochs;
    if (keep || on_epoch) {
      std::vector<Tensor<float>> params;
      for (auto id : g.params) params.push_back(g.graph.parameter_value(id));
      model.set_parameters(std::move(params));
    }
    if (keep) snapshot(epoch);
    if (on_epoch) {
      on_epoch(epoch, epoch_loss / static_cast<double>(order.size()),
               keep ? out.back().test_accuracy : accuracy(model, data, data.test));
    }
  }
  return out;
}

MicroModel restore(const MicroModelConfig& config, const ModelCheckpoint& checkpoint) {
  MicroModel m(config);
  m.set_parameters(checkpoint.parameters);
  return m;
}

void save_checkpoint(const ModelCheckpoint& checkpoint, const MicroModelConfig& config,
                     const std::filesystem::path& path) {
  interchange::Container c;
  for (std::size_t i = 0; i < checkpoint.parameters.size(); ++i) {
    const auto& t = checkpoint.parameters[i];
    interchange::Entry e;
    e.name = i < kParameterNames.size() ? std::string(kParameterNames[i]) : "param" + std::to_string(i);
    e.dims.assign(t.shape.begin(), t.shape.end());
    e.values = t.data;
    c.entries.push_back(std::move(e));
  }
  c.metadata = {{"kind", "checkpoint"},
                {"epoch", checkpoint.epoch},
                {"test_accuracy", checkpoint.test_accuracy},
                {"config_hash", checkpoint.config_hash},
                {"model", to_json(config)}};
  interchange::write(c, path);
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path, MicroModelConfig* config) {
  const auto c = interchange::read(path);
  ModelCheckpoint out;
  try {
    if (c.metadata.value("kind", "") != "checkpoint") throw Error(Errc::kInvalidContainer, "not a checkpoint");
    out.epoch = c.metadata.at("epoch").get<int>();
    out.test_accuracy = c.metadata.at("test_accuracy").get<double>();
    out.config_hash = c.metadata.at("config_hash").get<std::uint64_t>();
    if (config) *config = model_config_from(c.metadata.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidContainer, "'" + path.string() + "': checkpoint metadata: " + e.what());
  }
  for (std::string_view name : kParameterNames) {
    const auto* e = c.find(name);
    if (!e) throw Error(Errc::kInvalidContainer, "'" + path.string() + "': missing entry '" + std::string(name) + "'");
    out.parameters.emplace_back(autodiff::Shape(e->dims.begin(), e->dims.end()), e->values);
  }
  return out;
}

}  // namespace cose::model
