// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Input-gradient methods: vanilla, SmoothGrad and the path-integral family.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cose/error.hpp"
#include "cose/random.hpp"
#include "cose/saliency/saliency.hpp"
#include "cose/transforms/transforms.hpp"

namespace cose::saliency {

namespace {

constexpr int kMaxPieces = 16;

void check(const Classifier& model, const Image& image, int target) {
  model::check_input(model, image);
  if (target < 0 || target >= model.num_classes()) {
    throw Error(Errc::kInvalidArgument, "target class " + std::to_string(target) + " out of range");
  }
}

Attribution finish(std::vector<double> raw, const Image& image, int target, std::string_view method) {
  Attribution a;
  a.channels = image.channels;
  a.height = image.height;
  a.width = image.width;
  a.raw = std::move(raw);
  const auto reduced = reduce_channels(a.raw, a.channels, a.height, a.width);
  a.map = SaliencyMap(a.height, a.width);
  a.map.values = normalize_min_max(std::span<const double>(reduced));
  a.map.method = std::string(method);
  a.map.target_class = target;
  return a;
}

Image point_on_path(const Image& start, const Image& end, double alpha) {
  Image p(start.channels, start.height, start.width);
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    p.data[i] = static_cast<float>(start.data[i] + alpha * (static_cast<double>(end.data[i]) - start.data[i]));
  }
  return p;
}

}  // namespace

std::vector<double> reduce_channels(const std::vector<double>& values, int channels, int height, int width) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  std::vector<double> out(plane, 0.0);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) out[i] = std::max(out[i], std::abs(values[c * plane + i]));
  }
  return out;
}

Attribution vanilla_gradient(const Classifier& model, const Image& image, int target) {
  check(model, image, target);
  auto session = model.open_session();
  return finish(session->gradient(image, target, false).input_grad, image, target, "vanilla_gradient");
}

Attribution smoothgrad(const Classifier& model, const Image& image, int target, int samples, double noise,
                       std::uint64_t seed) {
  check(model, image, target);
  if (samples < 1) throw Error(Errc::kInvalidArgument, "smoothgrad needs >= 1 sample");
  if (!(noise >= 0.0)) throw Error(Errc::kInvalidArgument, "smoothgrad noise must be >= 0");
  const auto [lo, hi] = std::minmax_element(image.data.begin(), image.data.end());
  const double sigma = noise * (static_cast<double>(*hi) - *lo);
  auto session = model.open_session();
  Rng rng(seed);
  std::vector<double> sum(image.data.size(), 0.0);
  Image noisy = image;
  for (int s = 0; s < samples; ++s) {
    if (sigma > 0.0) {
      for (std::size_t i = 0; i < noisy.data.size(); ++i) {
        noisy.data[i] = static_cast<float>(image.data[i] + sigma * rng.normal());
      }
    }
    const auto g = session->gradient(noisy, target, false).input_grad;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
  }
  for (double& v : sum) v /= samples;
  return finish(std::move(sum), image, target, "smoothgrad");
}

Attribution integrated_gradients(const Classifier& model, const Image& image, int target, int steps,
                                 const Image* baseline) {
  check(model, image, target);
  if (steps < 1) throw Error(Errc::kInvalidArgument, "integrated gradients needs >= 1 step");
  const Image black(image.channels, image.height, image.width, 0.0f);
  const Image& base = baseline ? *baseline : black;
  if (!base.same_shape(image)) throw Error(Errc::kShapeMismatch, "baseline shape differs from the image");
  auto session = model.open_session();
  std::vector<double> sum(image.data.size(), 0.0);
  for (int k = 0; k < steps; ++k) {
    const double alpha = (k + 0.5) / steps;
    const auto g = session->gradient(point_on_path(base, image, alpha), target, false).input_grad;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] *= (static_cast<double>(image.data[i]) - base.data[i]) / steps;
  }
  return finish(std::move(sum), image, target, "integrated_gradients");
}

Attribution blur_ig(const Classifier& model, const Image& image, int target, int steps, double max_sigma) {
  check(model, image, target);
  if (steps < 1) throw Error(Errc::kInvalidArgument, "blur IG needs >= 1 step");
  if (!(max_sigma > 0.0)) throw Error(Errc::kInvalidArgument, "blur IG max_sigma must be > 0");
  auto session = model.open_session();
  std::vector<double> raw(image.data.size(), 0.0);
  auto sigma_at = [&](double k) { return max_sigma * (1.0 - k / steps); };
  Image prev = transforms::gaussian_blur(image, sigma_at(0));
  for (int k = 0; k < steps; ++k) {
    const Image next = k + 1 == steps ? image : transforms::gaussian_blur(image, sigma_at(k + 1));
    const Image mid = transforms::gaussian_blur(image, sigma_at(k + 0.5));
    const auto g = session->gradient(mid, target, false).input_grad;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] += g[i] * (static_cast<double>(next.data[i]) - prev.data[i]);
    }
    prev = next;
  }
  return finish(std::move(raw), image, target, "blur_ig");
}

Attribution guided_ig(const Classifier& model, const Image& image, int target, int steps, double fraction,
                      std::vector<double>* l1_trace) {
  check(model, image, target);
  if (steps < 1) throw Error(Errc::kInvalidArgument, "guided IG needs >= 1 step");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::kInvalidArgument, "guided IG fraction must be in (0, 1]");
  const std::size_t n = image.data.size();
  // Per-coordinate progress from black (0) to the image (1).
  std::vector<double> alpha(n, 0.0), span(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    span[i] = std::abs(static_cast<double>(image.data[i]));
    if (span[i] == 0.0) alpha[i] = 1.0;
    total += span[i];
  }
  std::vector<double> raw(n, 0.0);
  if (total == 0.0) return finish(std::move(raw), image, target, "guided_ig");

  auto session = model.open_session();
  auto at = [&](const std::vector<double>& a) {
    Image p(image.channels, image.height, image.width);
    for (std::size_t i = 0; i < n; ++i) p.data[i] = static_cast<float>(a[i] * image.data[i]);
    return p;
  };
  std::vector<std::size_t> order(n);
  for (int k = 0; k < steps; ++k) {
    const std::vector<double> start = alpha;
    double done = 0.0;
    for (std::size_t i = 0; i < n; ++i) done += alpha[i] * span[i];
    double gap = total * (k + 1) / steps - done;
    if (k + 1 == steps) {
      std::fill(alpha.begin(), alpha.end(), 1.0);
    } else {
      const auto g = session->gradient(at(alpha), target, false).input_grad;
      while (gap > 0.0) {
        order.clear();
        for (std::size_t i = 0; i < n; ++i) {
          if (alpha[i] < 1.0) order.push_back(i);
        }
        if (order.empty()) break;
        const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * order.size())));
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return std::abs(g[a]) < std::abs(g[b]); });
        order.resize(std::min(take, order.size()));
        double remaining = 0.0;
        for (std::size_t i : order) remaining += (1.0 - alpha[i]) * span[i];
        if (remaining > gap) {
          const double gamma = gap / remaining;
          for (std::size_t i : order) alpha[i] += gamma * (1.0 - alpha[i]);
          gap = 0.0;
        } else {
          for (std::size_t i : order) alpha[i] = 1.0;
          gap -= remaining;
        }
      }
    }
    // Coordinates can jump far in one step once the cheap ones are done, so
    // long segments are split to keep the midpoint rule accurate.
    double widest = 0.0;
    for (std::size_t i = 0; i < n; ++i) widest = std::max(widest, alpha[i] - start[i]);
    const int pieces = std::clamp(static_cast<int>(std::ceil(widest * steps - 1e-9)), 1, kMaxPieces);
    std::vector<double> mid(n);
    for (int p = 0; p < pieces; ++p) {
      const double t = (p + 0.5) / pieces;
      for (std::size_t i = 0; i < n; ++i) mid[i] = start[i] + t * (alpha[i] - start[i]);
      const auto gm = session->gradient(at(mid), target, false).input_grad;
      for (std::size_t i = 0; i < n; ++i) raw[i] += gm[i] * (alpha[i] - start[i]) / pieces * image.data[i];
    }
    if (l1_trace) {
      double l1 = 0.0;
      for (std::size_t i = 0; i < n; ++i) l1 += alpha[i] * span[i];
      l1_trace->push_back(l1);
    }
  }
  return finish(std::move(raw), image, target, "guided_ig");
}

}  // namespace cose::saliency
