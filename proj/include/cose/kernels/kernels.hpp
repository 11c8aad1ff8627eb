// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace cose::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa) noexcept;

/// Inner loops shared by the autodiff primitives and SSIM. Every entry has a
/// scalar reference implementation; vector variants must agree with it
/// (bit-exactly for the f64 moment kernels, within rounding for f32).
struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  // acc[k * n + j] += moment_k(x[j], y[j]) for k in {x, y, x*x, y*y, x*y}
  void (*row_moments_f64)(const double* x, const double* y, double* acc, std::size_t n);
  // out[j] = sum_{k < window} in[j + k], j < n_out; summed in increasing k
  void (*box_sum_f64)(const double* in, double* out, std::size_t n_out, std::size_t window);
};

bool isa_supported(Isa isa) noexcept;

/// Table for a specific ISA. Throws cose::Error if the host cannot run it.
const KernelTable& table_for(Isa isa);

/// Active table: the best supported ISA, unless overridden by set_active_isa()
/// or the COSE_KERNELS environment variable (scalar | avx2 | neon).
const KernelTable& active();
void set_active_isa(Isa isa);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(COSE_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(COSE_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace cose::kernels
