#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "uplif/kernels.hpp"

using namespace uplif;

TEST(Kernels, ScalarAndAvx2AgreeOnCountLess) {
  if (!kernels::avx2_supported()) GTEST_SKIP() << "no AVX2 on this CPU";
  std::mt19937_64 rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 31u, 32u, 33u, 100u, 1000u}) {
    std::vector<Key> keys(n);
    for (auto& k : keys) k = rng();
    // Exercise the sign boundary explicitly.
    if (n > 2) {
      keys[0] = 0;
      keys[1] = ~0ULL;
      keys[2] = 1ULL << 63;
    }
    for (int probe_i = 0; probe_i < 50; ++probe_i) {
      Key probe = probe_i < 3 ? std::vector<Key>{0, ~0ULL, 1ULL << 63}[probe_i] : rng();
      if (n > 0 && probe_i % 2 == 0) probe = keys[rng() % n];
      EXPECT_EQ(kernels::scalar::count_less(keys, probe), kernels::avx2::count_less(keys, probe))
          << "n=" << n << " probe=" << probe;
    }
  }
}

TEST(Kernels, ScalarAndAvx2AgreeOnCountNonzero) {
  if (!kernels::avx2_supported()) GTEST_SKIP() << "no AVX2 on this CPU";
  std::mt19937_64 rng(12);
  for (std::size_t n : {0u, 1u, 31u, 32u, 33u, 63u, 64u, 65u, 1000u, 4097u}) {
    std::vector<std::uint8_t> flags(n);
    for (auto& f : flags) f = static_cast<std::uint8_t>(rng() % 3 == 0 ? 0 : (rng() % 255) + 1);
    EXPECT_EQ(kernels::scalar::count_nonzero(flags), kernels::avx2::count_nonzero(flags)) << n;
  }
}

TEST(Kernels, CountLessMatchesLinearOracle) {
  std::mt19937_64 rng(13);
  std::vector<Key> keys(257);
  for (auto& k : keys) k = rng() % 1000;
  for (Key probe = 0; probe < 1001; probe += 7) {
    const auto expected = static_cast<std::size_t>(std::count_if(keys.begin(), keys.end(), [&](Key k) { return k < probe; }));
    EXPECT_EQ(kernels::count_less(keys, probe), expected);
  }
}

TEST(Kernels, LowerBoundMatchesStdOnSortedRunsWithDuplicates) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Key> keys(rng() % 300);
    for (auto& k : keys) k = rng() % 50;
    std::sort(keys.begin(), keys.end());
    for (Key probe = 0; probe <= 51; ++probe) {
      const auto expected = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), probe) - keys.begin());
      ASSERT_EQ(kernels::lower_bound(keys, probe), expected);
    }
  }
}

TEST(Kernels, ActiveIsaIsReported) {
  const auto isa = kernels::active_isa();
  EXPECT_TRUE(isa == kernels::Isa::kScalar || kernels::avx2_supported());
  EXPECT_NE(std::string(kernels::isa_name(isa)), "");
}
