// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

#include "cose/image.hpp"

namespace cose::metrics {

enum class SsimMode { kWindowed, kGlobal };

std::string_view mode_name(SsimMode mode) noexcept;
/// "windowed" | "global"; throws Errc::kInvalidArgument otherwise.
SsimMode parse_mode(std::string_view text);

struct SsimParams {
  // Used as written, not squared against a dynamic range.
  double c1 = 0.01;
  double c2 = 0.03;
  int window = 11;
  SsimMode mode = SsimMode::kWindowed;

  void validate() const;
};

struct SsimResult {
  double value = 0.0;      // clamped to [0, 1]
  double unclamped = 0.0;
  bool clamped = false;
  std::size_t windows = 0;  // windows (or pixels, in global mode) that entered the mean
  double coverage = 0.0;    // fraction of candidate windows/pixels used
};

/// Windowed mode averages per-window SSIM (uniform weights, stride 1,
/// population moments) over windows lying entirely inside both masks.
/// Global mode evaluates the statistic once over the jointly valid pixels.
/// Throws Errc::kShapeMismatch or Errc::kNoOverlap.
SsimResult ssim_detail(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params = {});
double ssim(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params = {});
/// 1 - ssim.
double distance(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params = {});

/// Closed form for one window given population moments.
double ssim_from_moments(double mean_a, double mean_b, double var_a, double var_b, double cov, double c1, double c2);

}  // namespace cose::metrics
