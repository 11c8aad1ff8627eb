// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "cose/image.hpp"

namespace cose::model {

struct InputShape {
  int channels = 3;
  int height = 32;
  int width = 32;
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

/// d logit[target] with respect to the input, plus (on request) the target
/// convolutional activation and its gradient.
struct GradientResult {
  std::vector<double> logits;
  std::vector<double> input_grad;  // same layout as Image::data
  int act_channels = 0;
  int act_height = 0;
  int act_width = 0;
  std::vector<double> activation;       // (channel, row, column)
  std::vector<double> activation_grad;  // same layout
};

/// Evaluation state owned by one caller. Not thread-safe; open one per thread.
class Session {
 public:
  virtual ~Session() = default;
  virtual std::vector<double> logits(const Image& image) = 0;
  virtual GradientResult gradient(const Image& image, int target, bool with_activation) = 0;
};

/// A frozen classifier. Implementations must be safe to share across threads
/// as long as each thread uses its own Session.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual InputShape input_shape() const = 0;
  virtual int num_classes() const = 0;
  // False for models without a convolutional target layer (class-activation methods need one).
  virtual bool has_conv_activation() const { return false; }
  virtual std::unique_ptr<Session> open_session() const = 0;
};

struct Prediction {
  int label = 0;
  std::vector<double> probabilities;
};

std::vector<double> softmax(std::span<const double> logits);
/// Argmax with ties resolved toward the lowest class index.
int argmax(std::span<const double> values);
Prediction prediction_from_logits(std::span<const double> logits);

/// Throws Errc::kShapeMismatch when `image` does not match the model input.
void check_input(const Classifier& model, const Image& image);
Prediction predict(const Classifier& model, const Image& image);
Prediction predict(Session& session, const Image& image);

}  // namespace cose::model
