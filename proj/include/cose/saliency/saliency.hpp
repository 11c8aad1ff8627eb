// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cose/image.hpp"
#include "cose/model/classifier.hpp"

namespace cose::saliency {

struct MethodConfig {
  int ig_steps = 64;
  int blur_ig_steps = 64;
  double blur_ig_max_sigma = 0.0;  // <= 0: a quarter of the shorter image side
  int guided_ig_steps = 64;
  double guided_ig_fraction = 0.25;
  int smoothgrad_samples = 25;
  double smoothgrad_noise = 0.15;  // standard deviation as a fraction of the image value range
  int lime_segments = 64;
  int lime_samples = 256;
  double lime_ridge = 1.0;
  double lime_kernel_width = 0.25;
  std::uint64_t seed = 0;

  /// Throws Errc::kInvalidArgument on counts < 1 or negative scales.
  void validate() const;
};

/// Pre-normalization attributions plus the normalized map. `raw` is laid out
/// like Image::data for input-space methods (channels == image channels) and
/// is a single plane for class-activation and segment methods.
struct Attribution {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> raw;
  SaliencyMap map;
};

using model::Classifier;

Attribution vanilla_gradient(const Classifier& model, const Image& image, int target);
Attribution smoothgrad(const Classifier& model, const Image& image, int target, int samples, double noise,
                       std::uint64_t seed);
/// Midpoint Riemann sum along the straight path from `baseline` (black when
/// empty) to the image.
Attribution integrated_gradients(const Classifier& model, const Image& image, int target, int steps,
                                 const Image* baseline = nullptr);
/// Path from a blur of width max_sigma down to the image itself.
Attribution blur_ig(const Classifier& model, const Image& image, int target, int steps, double max_sigma);
/// Adaptive path from black: each step advances only the `fraction` of
/// unfinished coordinates with the smallest |gradient|. `l1_trace`, when set,
/// receives the L1 distance from the baseline after every step.
Attribution guided_ig(const Classifier& model, const Image& image, int target, int steps, double fraction,
                      std::vector<double>* l1_trace = nullptr);
Attribution gradcam(const Classifier& model, const Image& image, int target);
Attribution gradcam_pp(const Classifier& model, const Image& image, int target);
Attribution lime(const Classifier& model, const Image& image, int target, int segments, int samples,
                 double ridge, std::uint64_t seed, double kernel_width = 0.25);

/// Regular grid used by lime(): rows is the largest divisor of `segments`
/// not above its square root. Returns the segment id of every pixel.
std::vector<int> grid_segments(int height, int width, int segments);

/// Channel-wise max of |values| for a (channels, height, width) buffer.
std::vector<double> reduce_channels(const std::vector<double>& values, int channels, int height, int width);

/// Bilinear resize with half-pixel centres.
std::vector<double> upsample(const std::vector<double>& plane, int height, int width, int out_height,
                             int out_width);

/// Common signature every method is invoked through.
using MethodFn = std::function<SaliencyMap(const Classifier&, const Image&, int, const MethodConfig&)>;

struct Method {
  std::string name;
  MethodFn fn;
};

/// Built-in method names in a fixed order.
const std::vector<std::string>& method_names();
bool is_method(std::string_view name);
/// Throws Errc::kUnsupportedMethod for unknown names.
Method method(std::string_view name);

}  // namespace cose::saliency
