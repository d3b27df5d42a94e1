#pragma once

// Data-parallel inner loops of the last-mile search. Each kernel has a scalar
// reference and an AVX2 variant; the variant is chosen once at startup from
// the CPU feature flags (UPLIF_FORCE_SCALAR=1 pins the scalar path).

#include <cstddef>
#include <cstdint>
#include <span>

#include "uplif/common.hpp"

namespace uplif::kernels {

enum class Isa { kScalar, kAvx2 };

namespace scalar {
std::size_t count_less(std::span<const Key> keys, Key probe);
std::size_t count_nonzero(std::span<const std::uint8_t> flags);
}  // namespace scalar

namespace avx2 {
// Only callable when avx2_supported() is true.
std::size_t count_less(std::span<const Key> keys, Key probe);
std::size_t count_nonzero(std::span<const std::uint8_t> flags);
}  // namespace avx2

bool avx2_supported();
Isa active_isa();
const char* isa_name(Isa isa);

// Number of keys strictly below probe. Keys need not be sorted.
std::size_t count_less(std::span<const Key> keys, Key probe);

std::size_t count_nonzero(std::span<const std::uint8_t> flags);

// First index i in a non-decreasing span with keys[i] >= probe. Binary search
// narrows to a short run, then count_less finishes it.
std::size_t lower_bound(std::span<const Key> keys, Key probe);

}  // namespace uplif::kernels
