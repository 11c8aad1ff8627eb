// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Brute-force SSIM: explicit window loops with two-pass moments.

#pragma once

#include <stdexcept>

#include "cose/image.hpp"

namespace cose::testing {

inline double oracle_window_ssim(const SaliencyMap& a, const SaliencyMap& b, int y0, int x0, int k, double c1,
                                 double c2) {
  double ma = 0, mb = 0;
  for (int y = y0; y < y0 + k; ++y) {
    for (int x = x0; x < x0 + k; ++x) {
      ma += a.at(y, x);
      mb += b.at(y, x);
    }
  }
  const double n = static_cast<double>(k) * k;
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cov = 0;
  for (int y = y0; y < y0 + k; ++y) {
    for (int x = x0; x < x0 + k; ++x) {
      const double da = a.at(y, x) - ma, db = b.at(y, x) - mb;
      va += da * da;
      vb += db * db;
      cov += da * db;
    }
  }
  va /= n;
  vb /= n;
  cov /= n;
  return ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

/// Mean over windows fully valid in both masks; unclamped.
inline double oracle_ssim(const SaliencyMap& a, const SaliencyMap& b, int k = 11, double c1 = 0.01,
                          double c2 = 0.03) {
  double total = 0;
  long count = 0;
  for (int y0 = 0; y0 + k <= a.height; ++y0) {
    for (int x0 = 0; x0 + k <= a.width; ++x0) {
      bool ok = true;
      for (int y = y0; y < y0 + k && ok; ++y) {
        for (int x = x0; x < x0 + k && ok; ++x) ok = a.mask.at(y, x) && b.mask.at(y, x);
      }
      if (!ok) continue;
      total += oracle_window_ssim(a, b, y0, x0, k, c1, c2);
      ++count;
    }
  }
  if (count == 0) throw std::runtime_error("no valid windows");
  return total / static_cast<double>(count);
}

}  // namespace cose::testing
