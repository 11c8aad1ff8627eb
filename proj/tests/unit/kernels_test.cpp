// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cose/error.hpp"
#include "cose/kernels/kernels.hpp"
#include "cose/random.hpp"

namespace ck = cose::kernels;

namespace {

std::vector<ck::Isa> vector_isas() {
  std::vector<ck::Isa> out;
  for (ck::Isa isa : {ck::Isa::kAvx2, ck::Isa::kNeon}) {
    if (ck::isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

template <typename T>
std::vector<T> random_vec(cose::Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

}  // namespace

TEST(Kernels, ScalarAlwaysAvailable) {
  EXPECT_TRUE(ck::isa_supported(ck::Isa::kScalar));
  EXPECT_EQ(ck::table_for(ck::Isa::kScalar).isa, ck::Isa::kScalar);
}

TEST(Kernels, UnsupportedIsaThrows) {
  for (ck::Isa isa : {ck::Isa::kAvx2, ck::Isa::kNeon}) {
    if (!ck::isa_supported(isa)) {
      EXPECT_THROW(ck::table_for(isa), cose::Error);
    }
  }
}

TEST(Kernels, DotMatchesScalarWithinRounding) {
  const auto& ref = ck::table_for(ck::Isa::kScalar);
  cose::Rng rng(1);
  for (ck::Isa isa : vector_isas()) {
    const auto& vec = ck::table_for(isa);
    for (std::size_t n = 0; n < 200; ++n) {
      // Offset by one element to exercise unaligned loads.
      auto a = random_vec<float>(rng, n + 1);
      auto b = random_vec<float>(rng, n + 1);
      double exact = 0.0, magnitude = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        exact += static_cast<double>(a[i]) * b[i];
        magnitude += std::abs(static_cast<double>(a[i]) * b[i]);
      }
      const float s = ref.dot_f32(a.data() + 1, b.data() + 1, n);
      const float v = vec.dot_f32(a.data() + 1, b.data() + 1, n);
      const double bound = 1e-6 * (magnitude + 1.0);
      EXPECT_NEAR(s, exact, bound) << "n=" << n;
      EXPECT_NEAR(v, exact, bound) << ck::isa_name(isa) << " n=" << n;
    }
  }
}

TEST(Kernels, AxpyMatchesScalarWithinRounding) {
  const auto& ref = ck::table_for(ck::Isa::kScalar);
  cose::Rng rng(2);
  for (ck::Isa isa : vector_isas()) {
    const auto& vec = ck::table_for(isa);
    for (std::size_t n = 0; n < 100; ++n) {
      auto x = random_vec<float>(rng, n);
      auto y0 = random_vec<float>(rng, n);
      auto y1 = y0;
      const float alpha = static_cast<float>(rng.uniform(-2.0, 2.0));
      ref.axpy_f32(alpha, x.data(), y0.data(), n);
      vec.axpy_f32(alpha, x.data(), y1.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y0[i], y1[i], 1e-6f) << i;
    }
  }
}

TEST(Kernels, MomentKernelsAreBitExactAcrossIsas) {
  const auto& ref = ck::table_for(ck::Isa::kScalar);
  cose::Rng rng(3);
  for (ck::Isa isa : vector_isas()) {
    const auto& vec = ck::table_for(isa);
    for (std::size_t n = 1; n < 80; n += 3) {
      auto x = random_vec<double>(rng, n);
      auto y = random_vec<double>(rng, n);
      std::vector<double> acc0(5 * n, 0.25), acc1(5 * n, 0.25);
      for (int rep = 0; rep < 3; ++rep) {
        ref.row_moments_f64(x.data(), y.data(), acc0.data(), n);
        vec.row_moments_f64(x.data(), y.data(), acc1.data(), n);
      }
      EXPECT_EQ(acc0, acc1) << ck::isa_name(isa) << " n=" << n;

      for (std::size_t window = 1; window <= n && window <= 13; window += 2) {
        const std::size_t n_out = n - window + 1;
        std::vector<double> out0(n_out), out1(n_out);
        ref.box_sum_f64(x.data(), out0.data(), n_out, window);
        vec.box_sum_f64(x.data(), out1.data(), n_out, window);
        EXPECT_EQ(out0, out1) << "window=" << window;
      }
    }
  }
}

TEST(Kernels, SetActiveIsaRoundTrips) {
  const ck::Isa original = ck::active().isa;
  ck::set_active_isa(ck::Isa::kScalar);
  EXPECT_EQ(ck::active().isa, ck::Isa::kScalar);
  ck::set_active_isa(original);
  EXPECT_EQ(ck::active().isa, original);
}
