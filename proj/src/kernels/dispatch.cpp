// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "cose/error.hpp"
#include "cose/kernels/kernels.hpp"

namespace cose::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(COSE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(COSE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw Error(Errc::kInvalidArgument,
                "kernel ISA '" + std::string(isa_name(isa)) + "' is not supported on this host");
  }
  switch (isa) {
#if defined(COSE_HAVE_AVX2)
    case Isa::kAvx2: return detail::kAvx2Table;
#endif
#if defined(COSE_HAVE_NEON)
    case Isa::kNeon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("COSE_KERNELS")) {
    const std::string want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (want == isa_name(isa) && isa_supported(isa)) return &table_for(isa);
    }
  }
  if (isa_supported(Isa::kAvx2)) return &table_for(Isa::kAvx2);
  if (isa_supported(Isa::kNeon)) return &table_for(Isa::kNeon);
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) { active_slot().store(&table_for(isa), std::memory_order_release); }

}  // namespace cose::kernels
