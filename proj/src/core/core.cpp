// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "cose/error.hpp"
#include "cose/image.hpp"

namespace cose {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kShapeMismatch: return "shape-mismatch";
    case Errc::kInvalidGraph: return "invalid-graph";
    case Errc::kBackwardBeforeForward: return "backward-before-forward";
    case Errc::kTrainingDiverged: return "training-diverged";
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kUnsupportedMethod: return "unsupported-method";
    case Errc::kSingularRegression: return "singular-regression";
    case Errc::kNoOverlap: return "no-overlap";
    case Errc::kUndefinedMetric: return "undefined-metric";
    case Errc::kUndefinedCorrelation: return "undefined-correlation";
    case Errc::kBadMagic: return "bad-magic";
    case Errc::kUnsupportedVersion: return "unsupported-version";
    case Errc::kTruncated: return "truncated";
    case Errc::kDuplicateName: return "duplicate-name";
    case Errc::kInvalidContainer: return "invalid-container";
    case Errc::kMissingPredictions: return "missing-predictions";
    case Errc::kConfig: return "config";
    case Errc::kIo: return "io";
  }
  return "unknown";
}

std::size_t ValidityMask::count_valid() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
}

namespace {

template <typename T>
std::vector<float> normalize_impl(std::span<const T> raw) {
  std::vector<float> out(raw.size(), 0.5f);
  if (raw.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = static_cast<double>(*lo_it);
  const double hi = static_cast<double>(*hi_it);
  if (!(hi > lo)) return out;
  const double scale = 1.0 / (hi - lo);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<float>(std::clamp((static_cast<double>(raw[i]) - lo) * scale, 0.0, 1.0));
  }
  // The extremes land exactly on 0 and 1.
  out[static_cast<std::size_t>(lo_it - raw.begin())] = 0.0f;
  out[static_cast<std::size_t>(hi_it - raw.begin())] = 1.0f;
  return out;
}

}  // namespace

std::vector<float> normalize_min_max(std::span<const float> raw) { return normalize_impl(raw); }
std::vector<float> normalize_min_max(std::span<const double> raw) { return normalize_impl(raw); }

}  // namespace cose

#include <cmath>

#include "cose/gaussian.hpp"

namespace cose {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double d = static_cast<double>(k) - static_cast<double>(radius);
    taps[k] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[k];
  }
  for (double& t : taps) t /= total;
  return taps;
}

}  // namespace cose
