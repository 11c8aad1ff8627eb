// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <string>

#include "cose/error.hpp"
#include "cose/random.hpp"
#include "cose/saliency/saliency.hpp"

namespace cose::saliency {

namespace {

// Solves (A) x = b in place for symmetric positive definite A (n x n).
bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 1e-12)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

}  // namespace

std::vector<int> grid_segments(int height, int width, int segments) {
  if (segments < 1) throw Error(Errc::kInvalidArgument, "segments must be >= 1");
  int rows = 1;
  for (int r = 1; r * r <= segments; ++r) {
    if (segments % r == 0) rows = r;
  }
  const int cols = segments / rows;
  if (rows > height || cols > width) throw Error(Errc::kInvalidArgument, "more grid cells than pixels");
  std::vector<int> ids(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) ids[static_cast<std::size_t>(y) * width + x] = (y * rows / height) * cols + x * cols / width;
  }
  return ids;
}

Attribution lime(const Classifier& model, const Image& image, int target, int segments, int samples,
                 double ridge, std::uint64_t seed, double kernel_width) {
  model::check_input(model, image);
  if (target < 0 || target >= model.num_classes()) {
    throw Error(Errc::kInvalidArgument, "target class " + std::to_string(target) + " out of range");
  }
  if (segments < 4) throw Error(Errc::kInvalidArgument, "lime needs >= 4 segments");
  if (samples < segments) throw Error(Errc::kInvalidArgument, "lime needs at least as many samples as segments");
  if (ridge < 0.0 || !(kernel_width > 0.0)) throw Error(Errc::kInvalidArgument, "lime ridge/kernel width out of range");

  const auto ids = grid_segments(image.height, image.width, segments);
  const std::size_t plane = image.plane_size();
  std::vector<double> mean(image.channels, 0.0);
  for (int c = 0; c < image.channels; ++c) {
    for (float v : image.plane(c)) mean[c] += v;
    mean[c] /= static_cast<double>(plane);
  }

  auto session = model.open_session();
  Rng rng(seed);
  const int n = segments;
  std::vector<double> z(static_cast<std::size_t>(samples) * n), y(samples), w(samples);
  Image perturbed = image;
  for (int s = 0; s < samples; ++s) {
    double* row = z.data() + static_cast<std::size_t>(s) * n;
    int on = 0;
    for (int j = 0; j < n; ++j) {
      row[j] = (s == 0 || rng.coin()) ? 1.0 : 0.0;
      on += row[j] != 0.0;
    }
    for (int c = 0; c < image.channels; ++c) {
      for (std::size_t i = 0; i < plane; ++i) {
        perturbed.data[c * plane + i] = row[ids[i]] != 0.0 ? image.data[c * plane + i] : static_cast<float>(mean[c]);
      }
    }
    y[s] = model::predict(*session, perturbed).probabilities[target];
    // Cosine distance to the unperturbed (all-on) vector.
    const double d = on == 0 ? 1.0 : 1.0 - on / (std::sqrt(static_cast<double>(on)) * std::sqrt(static_cast<double>(n)));
    w[s] = std::sqrt(std::exp(-(d * d) / (kernel_width * kernel_width)));
  }

  // Weighted ridge with an unpenalized intercept: centre on weighted means.
  double wsum = 0.0, ybar = 0.0;
  std::vector<double> zbar(n, 0.0);
  for (int s = 0; s < samples; ++s) {
    wsum += w[s];
    ybar += w[s] * y[s];
    for (int j = 0; j < n; ++j) zbar[j] += w[s] * z[static_cast<std::size_t>(s) * n + j];
  }
  ybar /= wsum;
  for (double& v : zbar) v /= wsum;
  // Constant scores carry no signal; skip the rounding noise of centring.
  if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) ybar = y[0];
  std::vector<double> gram(static_cast<std::size_t>(n) * n, 0.0), rhs(n, 0.0), zc(n);
  for (int s = 0; s < samples; ++s) {
    for (int j = 0; j < n; ++j) zc[j] = z[static_cast<std::size_t>(s) * n + j] - zbar[j];
    const double yc = y[s] - ybar;
    for (int i = 0; i < n; ++i) {
      rhs[i] += w[s] * zc[i] * yc;
      for (int j = 0; j <= i; ++j) gram[i * n + j] += w[s] * zc[i] * zc[j];
    }
  }
  for (int i = 0; i < n; ++i) {
    gram[i * n + i] += ridge;
    for (int j = 0; j < i; ++j) gram[j * n + i] = gram[i * n + j];
  }
  if (!cholesky_solve(gram, rhs, n)) {
    throw Error(Errc::kSingularRegression,
                "lime regression is singular; increase the sample count or the ridge strength");
  }

  Attribution out;
  out.channels = 1;
  out.height = image.height;
  out.width = image.width;
  out.raw.resize(plane);
  for (std::size_t i = 0; i < plane; ++i) out.raw[i] = rhs[ids[i]];
  out.map = SaliencyMap(image.height, image.width);
  out.map.values = normalize_min_max(std::span<const double>(out.raw));
  out.map.method = "lime";
  out.map.target_class = target;
  return out;
}

}  // namespace cose::saliency
