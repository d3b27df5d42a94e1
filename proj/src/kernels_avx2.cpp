#include "uplif/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace uplif::kernels::avx2 {

// AVX2 only has a signed 64-bit compare; flipping the sign bit maps unsigned
// order onto signed order.
__attribute__((target("avx2"))) std::size_t count_less(std::span<const Key> keys, Key probe) {
  const __m256i bias = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));
  const __m256i needle = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(probe)), bias);
  const Key* p = keys.data();
  const std::size_t n = keys.size();
  std::size_t i = 0;
  std::size_t total = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i a = _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i)), bias);
    __m256i b =
        _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i + 4)), bias);
    int ma = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(needle, a)));
    int mb = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_cmpgt_epi64(needle, b)));
    total += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(ma)) +
                                      __builtin_popcount(static_cast<unsigned>(mb)));
  }
  for (; i < n; ++i) total += static_cast<std::size_t>(p[i] < probe);
  return total;
}

__attribute__((target("avx2"))) std::size_t count_nonzero(std::span<const std::uint8_t> flags) {
  const std::uint8_t* p = flags.data();
  const std::size_t n = flags.size();
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  std::size_t total = 0;
  for (; i + 32 <= n; i += 32) {
    __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    auto zeros = static_cast<unsigned>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
    total += 32 - static_cast<std::size_t>(__builtin_popcount(zeros));
  }
  for (; i < n; ++i) total += static_cast<std::size_t>(p[i] != 0);
  return total;
}

}  // namespace uplif::kernels::avx2

#else

namespace uplif::kernels::avx2 {
std::size_t count_less(std::span<const Key> keys, Key probe) { return scalar::count_less(keys, probe); }
std::size_t count_nonzero(std::span<const std::uint8_t> flags) { return scalar::count_nonzero(flags); }
}  // namespace uplif::kernels::avx2

#endif
