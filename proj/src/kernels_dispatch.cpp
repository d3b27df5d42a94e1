#include <cstdlib>
#include <cstring>

#include "uplif/kernels.hpp"

namespace uplif::kernels {
namespace {

using CountLessFn = std::size_t (*)(std::span<const Key>, Key);
using CountNonzeroFn = std::size_t (*)(std::span<const std::uint8_t>);

struct Table {
  Isa isa;
  CountLessFn count_less;
  CountNonzeroFn count_nonzero;
};

Table select() {
  const char* force = std::getenv("UPLIF_FORCE_SCALAR");
  bool forced = force != nullptr && std::strcmp(force, "0") != 0 && *force != '\0';
  if (!forced && avx2_supported()) return {Isa::kAvx2, &avx2::count_less, &avx2::count_nonzero};
  return {Isa::kScalar, &scalar::count_less, &scalar::count_nonzero};
}

const Table& table() {
  static const Table t = select();
  return t;
}

// Below this length a linear vector count beats further halving.
constexpr std::size_t kLinearCutoff = 32;

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() { return table().isa; }

const char* isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

std::size_t count_less(std::span<const Key> keys, Key probe) {
  return table().count_less(keys, probe);
}

std::size_t count_nonzero(std::span<const std::uint8_t> flags) {
  return table().count_nonzero(flags);
}

std::size_t lower_bound(std::span<const Key> keys, Key probe) {
  std::size_t lo = 0;
  std::size_t len = keys.size();
  while (len > kLinearCutoff) {
    std::size_t half = len / 2;
    if (keys[lo + half - 1] < probe) {
      lo += half;
      len -= half;
    } else {
      len = half;
    }
  }
  return lo + table().count_less(keys.subspan(lo, len), probe);
}

}  // namespace uplif::kernels
