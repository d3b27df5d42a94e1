#include "uplif/kernels.hpp"

namespace uplif::kernels::scalar {

std::size_t count_less(std::span<const Key> keys, Key probe) {
  std::size_t n = 0;
  for (Key k : keys) n += static_cast<std::size_t>(k < probe);
  return n;
}

std::size_t count_nonzero(std::span<const std::uint8_t> flags) {
  std::size_t n = 0;
  for (std::uint8_t f : flags) n += static_cast<std::size_t>(f != 0);
  return n;
}

}  // namespace uplif::kernels::scalar
