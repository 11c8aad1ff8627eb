// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "cose/kernels/kernels.hpp"

namespace cose::kernels {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  __m128 sums = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, sums);
  sums = _mm_add_ss(sums, shuf);
  return _mm_cvtss_f32(sums);
}

float dot_f32(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float sum = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// The f64 kernels avoid FMA so each lane performs exactly the scalar operations.
void row_moments_f64(const double* x, const double* y, double* acc, std::size_t n) {
  double* sx = acc;
  double* sy = acc + n;
  double* sxx = acc + 2 * n;
  double* syy = acc + 3 * n;
  double* sxy = acc + 4 * n;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d vx = _mm256_loadu_pd(x + j);
    const __m256d vy = _mm256_loadu_pd(y + j);
    _mm256_storeu_pd(sx + j, _mm256_add_pd(_mm256_loadu_pd(sx + j), vx));
    _mm256_storeu_pd(sy + j, _mm256_add_pd(_mm256_loadu_pd(sy + j), vy));
    _mm256_storeu_pd(sxx + j, _mm256_add_pd(_mm256_loadu_pd(sxx + j), _mm256_mul_pd(vx, vx)));
    _mm256_storeu_pd(syy + j, _mm256_add_pd(_mm256_loadu_pd(syy + j), _mm256_mul_pd(vy, vy)));
    _mm256_storeu_pd(sxy + j, _mm256_add_pd(_mm256_loadu_pd(sxy + j), _mm256_mul_pd(vx, vy)));
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
  for (; j + 4 <= n_out; j += 4) {
    __m256d s = _mm256_setzero_pd();
    for (std::size_t k = 0; k < window; ++k) s = _mm256_add_pd(s, _mm256_loadu_pd(in + j + k));
    _mm256_storeu_pd(out + j, s);
  }
  for (; j < n_out; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < window; ++k) s += in[j + k];
    out[j] = s;
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{Isa::kAvx2, &dot_f32, &axpy_f32, &row_moments_f64, &box_sum_f64};
}  // namespace detail

}  // namespace cose::kernels
