// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string>

#include "cose/error.hpp"
#include "cose/saliency/saliency.hpp"

namespace cose::saliency {

namespace {

enum class Weighting { kMean, kPlusPlus };

Attribution class_activation(const Classifier& model, const Image& image, int target, Weighting mode) {
  const std::string name = mode == Weighting::kMean ? "gradcam" : "gradcam_pp";
  if (!model.has_conv_activation()) {
    throw Error(Errc::kUnsupportedMethod, name + " needs a model with a convolutional target layer");
  }
  model::check_input(model, image);
  if (target < 0 || target >= model.num_classes()) {
    throw Error(Errc::kInvalidArgument, "target class " + std::to_string(target) + " out of range");
  }
  const auto r = model.open_session()->gradient(image, target, true);
  const int c = r.act_channels, h = r.act_height, w = r.act_width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  if (c < 1 || plane == 0 || r.activation.size() != c * plane || r.activation_grad.size() != c * plane) {
    throw Error(Errc::kUnsupportedMethod, name + ": model returned no activation");
  }

  std::vector<double> cam(plane, 0.0);
  for (int k = 0; k < c; ++k) {
    const double* a = r.activation.data() + k * plane;
    const double* g = r.activation_grad.data() + k * plane;
    double weight = 0.0;
    if (mode == Weighting::kMean) {
      for (std::size_t i = 0; i < plane; ++i) weight += g[i];
      weight /= static_cast<double>(plane);
    } else {
      // Closed-form second-order weights from gradient powers:
      // alpha = g^2 / (2 g^2 + sum(A) g^3), zero where the denominator vanishes.
      double sum_a = 0.0;
      for (std::size_t i = 0; i < plane; ++i) sum_a += a[i];
      for (std::size_t i = 0; i < plane; ++i) {
        const double g2 = g[i] * g[i];
        const double denom = 2.0 * g2 + sum_a * g2 * g[i];
        const double alpha = denom != 0.0 ? g2 / denom : 0.0;
        weight += alpha * std::max(g[i], 0.0);
      }
    }
    for (std::size_t i = 0; i < plane; ++i) cam[i] += weight * a[i];
  }
  for (double& v : cam) v = std::max(v, 0.0);

  Attribution out;
  out.channels = 1;
  out.height = image.height;
  out.width = image.width;
  out.raw = upsample(cam, h, w, image.height, image.width);
  out.map = SaliencyMap(image.height, image.width);
  out.map.values = normalize_min_max(std::span<const double>(out.raw));
  out.map.method = name;
  out.map.target_class = target;
  return out;
}

}  // namespace

std::vector<double> upsample(const std::vector<double>& plane, int height, int width, int out_height,
                             int out_width) {
  std::vector<double> out(static_cast<std::size_t>(out_height) * out_width);
  const double sy = static_cast<double>(height) / out_height;
  const double sx = static_cast<double>(width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, height - 1.0);
    const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, width - 1.0);
      const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, width - 1);
      const double tx = fx - x0;
      const auto v = [&](int yy, int xx) { return plane[static_cast<std::size_t>(yy) * width + xx]; };
      out[static_cast<std::size_t>(y) * out_width + x] =
          (v(y0, x0) * (1 - tx) + v(y0, x1) * tx) * (1 - ty) + (v(y1, x0) * (1 - tx) + v(y1, x1) * tx) * ty;
    }
  }
  return out;
}

Attribution gradcam(const Classifier& model, const Image& image, int target) {
  return class_activation(model, image, target, Weighting::kMean);
}

Attribution gradcam_pp(const Classifier& model, const Image& image, int target) {
  return class_activation(model, image, target, Weighting::kPlusPlus);
}

}  // namespace cose::saliency
