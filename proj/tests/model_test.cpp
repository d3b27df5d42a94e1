#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "uplif/model.hpp"

using namespace uplif;

namespace {

std::vector<Key> random_sorted(std::size_t n, std::uint64_t seed, Key mod = 0) {
  std::mt19937_64 rng(seed);
  std::set<Key> s;
  while (s.size() < n) s.insert(mod ? rng() % mod : rng());
  return {s.begin(), s.end()};
}

std::vector<Key> lognormal_keys(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::lognormal_distribution<double> d(0.0, 1.0);
  std::set<Key> s;
  while (s.size() < n) s.insert(static_cast<Key>(d(rng) * 1e9));
  return {s.begin(), s.end()};
}

// Exhaustive certification oracle.
double worst_deviation(const Model& m, const std::vector<Key>& keys, const std::vector<double>& pos) {
  double worst = 0.0;
  for (std::size_t i = 0; i < keys.size(); ++i) worst = std::max(worst, std::abs(m.predict(keys[i]) - pos[i]));
  return worst;
}

}  // namespace

TEST(Model, RejectsEmptyAndUnsortedInput) {
  std::vector<Key> none;
  try {
    Model::train(none, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty training set");
  }
  std::vector<Key> bad{1, 3, 2};
  try {
    Model::train(bad, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "keys not strictly sorted");
  }
  std::vector<Key> dup{1, 2, 2};
  EXPECT_THROW(Model::train(dup, {}), Error);
}

TEST(Model, SingleKeyPredictsZero) {
  std::vector<Key> one{42};
  auto m = Model::train(one, {});
  EXPECT_EQ(m.predict(42), 0.0);
  EXPECT_EQ(m.predict(0), 0.0);
  EXPECT_EQ(m.predict(~0ULL), 0.0);
  EXPECT_EQ(m.error_bound(), 0u);
}

TEST(Model, LinearKeysAreExact) {
  std::vector<Key> keys;
  for (Key k = 0; k < 1000; ++k) keys.push_back(100 + 3 * k);
  auto m = Model::train(keys, {});
  EXPECT_EQ(m.spline_points().size(), 2u);
  for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_NEAR(m.predict(keys[i]), static_cast<double>(i), 1e-9);
}

TEST(Model, ErrorBoundIsCertifiedExhaustively) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::uint32_t budget : {1u, 8u, 128u}) {
      const auto keys = seed % 2 ? lognormal_keys(20000, seed) : random_sorted(20000, seed);
      std::vector<double> pos(keys.size());
      for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
      ModelConfig cfg;
      cfg.spline_error_budget = budget;
      auto m = Model::train(keys, cfg);
      const double worst = worst_deviation(m, keys, pos);
      EXPECT_LE(worst, static_cast<double>(m.error_bound())) << "seed " << seed << " budget " << budget;
      // The corridor keeps each segment within the budget.
      EXPECT_LE(m.error_bound(), budget + 1) << "seed " << seed;
    }
  }
}

TEST(Model, PositionsOverloadCertifiesGappedSlots) {
  const auto keys = lognormal_keys(5000, 9);
  std::vector<double> pos(keys.size());
  std::mt19937_64 rng(9);
  double p = 0.0;
  for (auto& x : pos) {
    p += 1.0 + static_cast<double>(rng() % 5);
    x = p;
  }
  auto m = Model::train(keys, pos, {});
  EXPECT_LE(worst_deviation(m, keys, pos), static_cast<double>(m.error_bound()));
}

TEST(Model, PredictIsMonotoneOverRandomPairs) {
  const auto keys = lognormal_keys(10000, 21);
  ModelConfig cfg;
  cfg.spline_error_budget = 4;
  auto m = Model::train(keys, cfg);
  std::mt19937_64 rng(22);
  const Key lo = keys.front() > 1000 ? keys.front() - 1000 : 0;
  const Key hi = keys.back() + 1000;
  std::uniform_int_distribution<Key> any(lo, hi);
  for (int i = 0; i < 100000; ++i) {
    Key a = any(rng), b = any(rng);
    if (a > b) std::swap(a, b);
    ASSERT_LE(m.predict(a), m.predict(b)) << a << " " << b;
  }
}

TEST(Model, OutOfDomainClampsToPositionRange) {
  std::vector<Key> keys{100, 200, 300, 400};
  auto m = Model::train(keys, {});
  EXPECT_EQ(m.predict(0), 0.0);
  EXPECT_EQ(m.predict(10000), 3.0);
}

TEST(Model, SmallerBudgetNeverUsesFewerKnots) {
  const auto keys = lognormal_keys(20000, 31);
  std::size_t prev = 0;
  for (std::uint32_t budget : {512u, 128u, 32u, 8u, 2u}) {
    ModelConfig cfg;
    cfg.spline_error_budget = budget;
    const auto knots = Model::train(keys, cfg).spline_points().size();
    EXPECT_GE(knots, prev) << budget;
    prev = knots;
  }
}

TEST(Model, TrainingIsDeterministic) {
  const auto keys = lognormal_keys(3000, 41);
  EXPECT_TRUE(Model::train(keys, {}) == Model::train(keys, {}));
}

TEST(Model, SizeBytesCountsKnots) {
  const auto keys = random_sorted(1000, 51);
  auto m = Model::train(keys, {});
  EXPECT_GE(m.size_bytes(), m.spline_points().size() * sizeof(SplinePoint));
}
