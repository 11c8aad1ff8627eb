// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string>

#include "cose/error.hpp"
#include "cose/random.hpp"
#include "cose/saliency/saliency.hpp"

namespace cose::saliency {

void MethodConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::kInvalidArgument, std::string("method config: ") + what);
  };
  require(ig_steps >= 1 && blur_ig_steps >= 1 && guided_ig_steps >= 1, "step counts must be >= 1");
  require(guided_ig_fraction > 0.0 && guided_ig_fraction <= 1.0, "guided IG fraction must be in (0, 1]");
  require(smoothgrad_samples >= 1, "smoothgrad samples must be >= 1");
  require(smoothgrad_noise >= 0.0, "smoothgrad noise must be >= 0");
  require(lime_segments >= 4 && lime_samples >= lime_segments, "lime needs >= 4 segments and samples >= segments");
  require(lime_ridge >= 0.0 && lime_kernel_width > 0.0, "lime ridge must be >= 0 and kernel width > 0");
  require(blur_ig_max_sigma >= 0.0, "blur IG max sigma must be >= 0");
}

namespace {

// Distinct streams for the stochastic methods under one seed.
constexpr std::uint64_t kSmoothGradStream = 1;
constexpr std::uint64_t kLimeStream = 2;

const std::vector<Method>& registry() {
  static const std::vector<Method> methods = {
      {"vanilla_gradient",
       [](const Classifier& m, const Image& x, int t, const MethodConfig&) { return vanilla_gradient(m, x, t).map; }},
      {"smoothgrad",
       [](const Classifier& m, const Image& x, int t, const MethodConfig& c) {
         return smoothgrad(m, x, t, c.smoothgrad_samples, c.smoothgrad_noise, mix_seed(c.seed, kSmoothGradStream)).map;
       }},
      {"integrated_gradients",
       [](const Classifier& m, const Image& x, int t, const MethodConfig& c) {
         return integrated_gradients(m, x, t, c.ig_steps).map;
       }},
      {"blur_ig",
       [](const Classifier& m, const Image& x, int t, const MethodConfig& c) {
         const double sigma = c.blur_ig_max_sigma > 0.0 ? c.blur_ig_max_sigma : std::min(x.height, x.width) / 4.0;
         return blur_ig(m, x, t, c.blur_ig_steps, sigma).map;
       }},
      {"guided_ig",
       [](const Classifier& m, const Image& x, int t, const MethodConfig& c) {
         return guided_ig(m, x, t, c.guided_ig_steps, c.guided_ig_fraction).map;
       }},
      {"gradcam", [](const Classifier& m, const Image& x, int t, const MethodConfig&) { return gradcam(m, x, t).map; }},
      {"gradcam_pp",
       [](const Classifier& m, const Image& x, int t, const MethodConfig&) { return gradcam_pp(m, x, t).map; }},
      {"lime",
       [](const Classifier& m, const Image& x, int t, const MethodConfig& c) {
         return lime(m, x, t, c.lime_segments, c.lime_samples, c.lime_ridge, mix_seed(c.seed, kLimeStream),
                     c.lime_kernel_width)
             .map;
       }},
  };
  return methods;
}

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& m : registry()) out.push_back(m.name);
    return out;
  }();
  return names;
}

bool is_method(std::string_view name) {
  const auto& names = method_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

Method method(std::string_view name) {
  for (const auto& m : registry()) {
    if (m.name == name) return m;
  }
  throw Error(Errc::kUnsupportedMethod, "unknown saliency method '" + std::string(name) + "'");
}

}  // namespace cose::saliency
