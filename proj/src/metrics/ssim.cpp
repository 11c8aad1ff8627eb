// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/metrics/ssim.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "cose/error.hpp"
#include "cose/kernels/kernels.hpp"
#include "cose/metrics/summation.hpp"

namespace cose::metrics {

std::string_view mode_name(SsimMode mode) noexcept { return mode == SsimMode::kGlobal ? "global" : "windowed"; }

SsimMode parse_mode(std::string_view text) {
  if (text == "windowed") return SsimMode::kWindowed;
  if (text == "global") return SsimMode::kGlobal;
  throw Error(Errc::kInvalidArgument, "SSIM mode must be 'windowed' or 'global', got '" + std::string(text) + "'");
}

void SsimParams::validate() const {
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw Error(Errc::kInvalidArgument, "SSIM constants must be > 0");
  if (window < 3 || window % 2 == 0) throw Error(Errc::kInvalidArgument, "SSIM window must be odd and >= 3");
}

double ssim_from_moments(double mean_a, double mean_b, double var_a, double var_b, double cov, double c1, double c2) {
  return ((2.0 * mean_a * mean_b + c1) * (2.0 * cov + c2)) /
         ((mean_a * mean_a + mean_b * mean_b + c1) * (var_a + var_b + c2));
}

namespace {

bool joint_valid(const SaliencyMap& a, const SaliencyMap& b, std::size_t i) {
  const bool va = a.mask.valid.empty() || a.mask.valid[i] != 0;
  const bool vb = b.mask.valid.empty() || b.mask.valid[i] != 0;
  return va && vb;
}

void check_shapes(const SaliencyMap& a, const SaliencyMap& b) {
  const auto n = static_cast<std::size_t>(a.height) * a.width;
  const auto mask_ok = [n](const SaliencyMap& m) { return m.mask.valid.empty() || m.mask.valid.size() == n; };
  if (a.height != b.height || a.width != b.width || a.values.size() != n || b.values.size() != n || !mask_ok(a) ||
      !mask_ok(b)) {
    throw Error(Errc::kShapeMismatch, "SSIM needs equal map shapes, got " + std::to_string(a.height) + "x" +
                                          std::to_string(a.width) + " and " + std::to_string(b.height) + "x" +
                                          std::to_string(b.width));
  }
}

SsimResult finish(double mean, std::size_t used, std::size_t candidates) {
  SsimResult r;
  r.unclamped = mean;
  r.value = std::clamp(mean, 0.0, 1.0);
  r.clamped = r.value != mean;
  r.windows = used;
  r.coverage = candidates ? static_cast<double>(used) / static_cast<double>(candidates) : 0.0;
  return r;
}

SsimResult global_ssim(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& p) {
  const std::size_t n = a.values.size();
  NeumaierSum sa, sb;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!joint_valid(a, b, i)) continue;
    sa.add(a.values[i]);
    sb.add(b.values[i]);
    ++used;
  }
  if (used == 0) throw Error(Errc::kNoOverlap, "no jointly valid pixels");
  const double ma = sa.value() / static_cast<double>(used), mb = sb.value() / static_cast<double>(used);
  NeumaierSum vaa, vbb, vab;
  for (std::size_t i = 0; i < n; ++i) {
    if (!joint_valid(a, b, i)) continue;
    const double da = a.values[i] - ma, db = b.values[i] - mb;
    vaa.add(da * da);
    vbb.add(db * db);
    vab.add(da * db);
  }
  const double inv = 1.0 / static_cast<double>(used);
  return finish(ssim_from_moments(ma, mb, vaa.value() * inv, vbb.value() * inv, vab.value() * inv, p.c1, p.c2), used,
                n);
}

SsimResult windowed_ssim(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& p) {
  const int h = a.height, w = a.width, k = p.window;
  if (h < k || w < k) throw Error(Errc::kNoOverlap, "map smaller than the SSIM window");
  const std::size_t oh = static_cast<std::size_t>(h - k + 1), ow = static_cast<std::size_t>(w - k + 1);
  const auto uw = static_cast<std::size_t>(w);

  // Integral image of invalid pixels decides which windows are usable.
  std::vector<int> bad((h + 1) * (w + 1), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int invalid = joint_valid(a, b, static_cast<std::size_t>(y) * w + x) ? 0 : 1;
      bad[(y + 1) * (w + 1) + x + 1] = invalid + bad[y * (w + 1) + x + 1] + bad[(y + 1) * (w + 1) + x] - bad[y * (w + 1) + x];
    }
  }
  const auto window_bad = [&](std::size_t y, std::size_t x) {
    const std::size_t y1 = y + k, x1 = x + k;
    return bad[y1 * (w + 1) + x1] - bad[y * (w + 1) + x1] - bad[y1 * (w + 1) + x] + bad[y * (w + 1) + x];
  };

  const auto& kt = kernels::active();
  std::vector<double> xa(a.values.begin(), a.values.end()), xb(b.values.begin(), b.values.end());
  std::vector<double> cols(5 * uw), sums(5 * ow);
  const double inv = 1.0 / (static_cast<double>(k) * k);
  NeumaierSum total;
  std::size_t used = 0;
  for (std::size_t y = 0; y < oh; ++y) {
    bool any = false;
    for (std::size_t x = 0; x < ow && !any; ++x) any = window_bad(y, x) == 0;
    if (!any) continue;
    std::fill(cols.begin(), cols.end(), 0.0);
    for (int r = 0; r < k; ++r) {
      const std::size_t row = (y + r) * uw;
      kt.row_moments_f64(xa.data() + row, xb.data() + row, cols.data(), uw);
    }
    for (int m = 0; m < 5; ++m) kt.box_sum_f64(cols.data() + m * uw, sums.data() + m * ow, ow, k);
    for (std::size_t x = 0; x < ow; ++x) {
      if (window_bad(y, x) != 0) continue;
      const double ma = sums[x] * inv, mb = sums[ow + x] * inv;
      const double va = sums[2 * ow + x] * inv - ma * ma;
      const double vb = sums[3 * ow + x] * inv - mb * mb;
      const double cov = sums[4 * ow + x] * inv - ma * mb;
      total.add(ssim_from_moments(ma, mb, va, vb, cov, p.c1, p.c2));
      ++used;
    }
  }
  if (used == 0) throw Error(Errc::kNoOverlap, "no SSIM window lies inside both validity masks");
  return finish(total.value() / static_cast<double>(used), used, oh * ow);
}

}  // namespace

SsimResult ssim_detail(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params) {
  params.validate();
  check_shapes(a, b);
  return params.mode == SsimMode::kGlobal ? global_ssim(a, b, params) : windowed_ssim(a, b, params);
}

double ssim(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params) {
  return ssim_detail(a, b, params).value;
}

double distance(const SaliencyMap& a, const SaliencyMap& b, const SsimParams& params) {
  return 1.0 - ssim(a, b, params);
}

}  // namespace cose::metrics
