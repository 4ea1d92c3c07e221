#pragma once

#include "revert/simd/kernels.hpp"

namespace revert::simd::detail {

// Defined in the ISA-specific translation units; nullptr when not built.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

}  // namespace revert::simd::detail
