// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <arm_neon.h>

#include "cose/kernels/kernels.hpp"

namespace cose::kernels {
namespace {

float dot_f32(const float* a, const float* b, std::size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  float sum = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void row_moments_f64(const double* x, const double* y, double* acc, std::size_t n) {
  double* sx = acc;
  double* sy = acc + n;
  double* sxx = acc + 2 * n;
  double* syy = acc + 3 * n;
  double* sxy = acc + 4 * n;
  std::size_t j = 0;
  for (; j + 2 <= n; j += 2) {
    const float64x2_t vx = vld1q_f64(x + j);
    const float64x2_t vy = vld1q_f64(y + j);
    vst1q_f64(sx + j, vaddq_f64(vld1q_f64(sx + j), vx));
    vst1q_f64(sy + j, vaddq_f64(vld1q_f64(sy + j), vy));
    vst1q_f64(sxx + j, vaddq_f64(vld1q_f64(sxx + j), vmulq_f64(vx, vx)));
    vst1q_f64(syy + j, vaddq_f64(vld1q_f64(syy + j), vmulq_f64(vy, vy)));
    vst1q_f64(sxy + j, vaddq_f64(vld1q_f64(sxy + j), vmulq_f64(vx, vy)));
  }
  for (; j < n; ++j) {
    sx[j] += x[j];
    sy[j] += y[j];
    sxx[j] += x[j] * x[j];
    syy[j] += y[j] * y[j];
    sxy[j] += x[j] * y[j];
  }
}

void box_sum_f64(const double* in, double* out, std::size_t n_out, std::size_t window) {
  std::size_t j = 0;
  for (; j + 2 <= n_out; j += 2) {
    float64x2_t s = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < window; ++k) s = vaddq_f64(s, vld1q_f64(in + j + k));
    vst1q_f64(out + j, s);
  }
  for (; j < n_out; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += in[j + k];
    out[j] = s;
  }
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{Isa::kNeon, &dot_f32, &axpy_f32, &row_moments_f64, &box_sum_f64};
}  // namespace detail

}  // namespace cose::kernels
