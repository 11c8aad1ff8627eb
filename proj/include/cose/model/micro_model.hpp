// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "cose/autodiff/graph.hpp"
#include "cose/model/classifier.hpp"

namespace cose::model {

enum class Precision { kFloat32, kFloat64 };

struct MicroModelConfig {
  InputShape input;
  int num_classes = 3;
  int conv1_channels = 8;
  int conv2_channels = 16;
  Precision precision = Precision::kFloat32;
};

inline constexpr std::array<std::string_view, 6> kParameterNames = {
    "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "fc.weight", "fc.bias",
};

// Name of the activation class-activation methods read: the post-ReLU output
// of the second convolution.
inline constexpr std::string_view kTargetActivation = "relu2";

template <typename T>
struct MicroGraph {
  autodiff::Graph<T> graph;
  autodiff::NodeId input;
  autodiff::NodeId logits;
  autodiff::NodeId activation;
  autodiff::NodeId loss;  // cross-entropy head; label set per sample
  std::array<autodiff::NodeId, 6> params;
};

/// conv3x3 -> relu -> maxpool2 -> conv3x3 -> relu -> maxpool2 -> dense.
/// Outputs logits; probabilities come from softmax().
class MicroModel final : public Classifier {
 public:
  explicit MicroModel(MicroModelConfig config = {});
  /// He-initialized parameters.
  static MicroModel initialized(MicroModelConfig config, std::uint64_t seed);

  InputShape input_shape() const override { return config_.input; }
  int num_classes() const override { return config_.num_classes; }
  bool has_conv_activation() const override { return true; }
  std::unique_ptr<Session> open_session() const override;

  const MicroModelConfig& config() const { return config_; }
  void set_precision(Precision p) { config_.precision = p; }

  std::vector<autodiff::Shape> parameter_shapes() const;
  const std::vector<autodiff::Tensor<float>>& parameters() const { return params_; }
  /// Throws Errc::kShapeMismatch unless the shapes match parameter_shapes().
  void set_parameters(std::vector<autodiff::Tensor<float>> params);

  /// Builds a fresh graph over the current parameters. `train` marks the
  /// parameters as requiring gradients and the input as not.
  template <typename T>
  MicroGraph<T> build_graph(bool train = false) const;

  /// Averages every kernel with its horizontal mirror (and the dense weights
  /// with their mirrored columns). The logits then ignore left-right flips
  /// whenever the input width is a multiple of 4 (so pooling windows mirror).
  void symmetrize_lr();

 private:
  MicroModelConfig config_;
  std::vector<autodiff::Tensor<float>> params_;
};

template <typename T>
autodiff::Tensor<T> to_tensor(const Image& image);

extern template MicroGraph<float> MicroModel::build_graph<float>(bool) const;
extern template MicroGraph<double> MicroModel::build_graph<double>(bool) const;

}  // namespace cose::model
