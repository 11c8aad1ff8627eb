// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/kernels/kernels.hpp"

namespace cose::kernels {
namespace {

float dot_f32(const float* a, const float* b, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void row_moments_f64(const double* x, const double* y, double* acc, std::size_t n) {
  double* sx = acc;
  double* sy = acc + n;
  double* sxx = acc + 2 * n;
  double* syy = acc + 3 * n;
  double* sxy = acc + 4 * n;
  for (std::size_t j = 0; j < n; ++j) {
    sx[j] += x[j];
    sy[j] += y[j];
    sxx[j] += x[j] * x[j];
    syy[j] += y[j] * y[j];
    sxy[j] += x[j] * y[j];
  }
}

void box_sum_f64(const double* in, double* out, std::size_t n_out, std::size_t window) {
  for (std::size_t j = 0; j < n_out; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += in[j + k];
    out[j] = s;
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::kScalar, &dot_f32, &axpy_f32, &row_moments_f64,
                               &box_sum_f64};
}  // namespace detail

}  // namespace cose::kernels
