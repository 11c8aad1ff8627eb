// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/model/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cose/error.hpp"

namespace cose::model {

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::kInvalidArgument, "argmax of an empty vector");
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

Prediction prediction_from_logits(std::span<const double> logits) {
  Prediction p;
  p.label = argmax(logits);
  p.probabilities = softmax(logits);
  return p;
}

void check_input(const Classifier& model, const Image& image) {
  const InputShape s = model.input_shape();
  if (image.channels != s.channels || image.height != s.height || image.width != s.width ||
      image.data.size() != static_cast<std::size_t>(image.channels) * image.height * image.width) {
    throw Error(Errc::kShapeMismatch, "image " + std::to_string(image.channels) + "x" +
                                          std::to_string(image.height) + "x" + std::to_string(image.width) +
                                          " does not match model input " + std::to_string(s.channels) + "x" +
                                          std::to_string(s.height) + "x" + std::to_string(s.width));
  }
}

Prediction predict(Session& session, const Image& image) { return prediction_from_logits(session.logits(image)); }

Prediction predict(const Classifier& model, const Image& image) {
  check_input(model, image);
  auto session = model.open_session();
  return predict(*session, image);
}

}  // namespace cose::model
