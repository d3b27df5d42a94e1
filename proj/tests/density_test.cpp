#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "uplif/density.hpp"

using namespace uplif;

namespace {

// Composite Simpson over the density's pdf, independent of the CDF path.
double simpson(const DensityModel& d, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = d.pdf(a) + d.pdf(b);
  for (int i = 1; i < panels; ++i) s += d.pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Gap count from quadrature, rounded up.
double quadrature_gap(const DensityModel& d, double ki, double kj, double dmax, double lo, double hi) {
  return std::ceil(dmax * simpson(d, ki, kj) / simpson(d, lo, hi));
}

std::vector<Key> gaussian_samples(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, sd);
  std::vector<Key> out(n);
  for (auto& k : out) k = static_cast<Key>(std::llround(std::max(0.0, g(rng))));
  return out;
}

}  // namespace

TEST(Density, FallsBackToUniformBelowThreshold) {
  std::vector<Key> none;
  auto d = fit_update_distribution(none, 3, 256);
  EXPECT_TRUE(d.fallback_uniform());
  std::vector<Key> few(255, 5);
  EXPECT_TRUE(fit_update_distribution(few, 3, 256).fallback_uniform());
  EXPECT_EQ(fit_update_distribution(few, 3, 256).sample_count(), 255u);
}

TEST(Density, ZeroComponentsIsRejected) {
  std::vector<Key> some(1000, 5);
  try {
    fit_update_distribution(some, 0, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "invalid component count");
  }
}

TEST(Density, SingleGaussianMatchesSampleMoments) {
  const auto xs = gaussian_samples(10000, 100.0, 5.0, 3);
  double mean = 0.0;
  for (Key k : xs) mean += static_cast<double>(k);
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (Key k : xs) var += (static_cast<double>(k) - mean) * (static_cast<double>(k) - mean);
  var /= static_cast<double>(xs.size());

  auto d = fit_update_distribution(xs, 1, 256);
  ASSERT_FALSE(d.fallback_uniform());
  ASSERT_EQ(d.components().size(), 1u);
  const auto& c = d.components()[0];
  EXPECT_NEAR(c.mean, 100.0, 0.5);
  EXPECT_NEAR(c.variance, 25.0, 2.5);
  // A one-component EM fit is the maximum-likelihood Gaussian: sample moments.
  EXPECT_NEAR(c.mean, mean, 1e-6);
  EXPECT_NEAR(c.variance, var, 1e-6 * var);
}

TEST(Density, DegenerateClusterClampsVariance) {
  std::vector<Key> sevens(1000, 7);
  auto d = fit_update_distribution(sevens, 1, 256);
  ASSERT_EQ(d.components().size(), 1u);
  EXPECT_DOUBLE_EQ(d.components()[0].mean, 7.0);
  EXPECT_DOUBLE_EQ(d.components()[0].variance, EmSettings{}.variance_floor_factor);
}

TEST(Density, MixtureWeightsSumToOneAndTraceIsNonDecreasing) {
  auto a = gaussian_samples(3000, 1e6, 1e4, 5);
  auto b = gaussian_samples(1000, 5e6, 5e4, 6);
  a.insert(a.end(), b.begin(), b.end());
  auto d = fit_update_distribution(a, 4, 256);
  double w = 0.0;
  for (const auto& c : d.components()) {
    EXPECT_GT(c.variance, 0.0);
    w += c.weight;
  }
  EXPECT_NEAR(w, 1.0, 1e-9);
  const auto& tr = d.log_likelihood_trace();
  ASSERT_GE(tr.size(), 2u);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i], tr[i - 1] - 1e-9) << "iteration " << i;
}

TEST(Density, FitIsDeterministic) {
  const auto xs = gaussian_samples(5000, 1e9, 1e7, 8);
  auto d1 = fit_update_distribution(xs, 4, 256);
  auto d2 = fit_update_distribution(xs, 4, 256);
  ASSERT_EQ(d1.components().size(), d2.components().size());
  for (std::size_t i = 0; i < d1.components().size(); ++i) {
    EXPECT_EQ(d1.components()[i].mean, d2.components()[i].mean);
    EXPECT_EQ(d1.components()[i].variance, d2.components()[i].variance);
    EXPECT_EQ(d1.components()[i].weight, d2.components()[i].weight);
  }
}

TEST(Density, NormalCdfKnownValues) {
  EXPECT_DOUBLE_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-1.96), 0.024997895148220435, 1e-15);
  EXPECT_NEAR(normal_cdf(-10.0), 7.619853024160527e-24, 1e-36);
}

TEST(GapSize, UniformTwentyPercentOfDomain) {
  auto u = DensityModel::uniform();
  EXPECT_EQ(gap_size(u, 0.0, 20.0, 10, 0.0, 100.0), 2u);
}

TEST(GapSize, WholeDomainYieldsDmax) {
  auto u = DensityModel::uniform();
  EXPECT_EQ(gap_size(u, 3.0, 977.0, 64, 3.0, 977.0), 64u);
  auto g = DensityModel::mixture({{0.3, 10.0, 4.0}, {0.7, 50.0, 100.0}}, 1000);
  EXPECT_EQ(gap_size(g, 0.0, 100.0, 64, 0.0, 100.0), 64u);
}

TEST(GapSize, SingleGaussianWorkedExample) {
  auto g = DensityModel::mixture({{1.0, 50.0, 100.0}}, 1000);
  EXPECT_EQ(gap_size(g, 40.0, 60.0, 100, 0.0, 100.0), 69u);
  EXPECT_EQ(quadrature_gap(g, 40.0, 60.0, 100.0, 0.0, 100.0), 69.0);
}

TEST(GapSize, EmptyIntervalIsRejected) {
  auto u = DensityModel::uniform();
  try {
    gap_size(u, 5.0, 5.0, 10, 0.0, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty interval");
  }
  EXPECT_THROW(gap_size(u, 6.0, 5.0, 10, 0.0, 10.0), Error);
}

TEST(GapSize, ZeroBudgetGivesNoGaps) {
  auto u = DensityModel::uniform();
  EXPECT_EQ(gap_size(u, 0.0, 50.0, 0, 0.0, 100.0), 0u);
}

TEST(GapSize, MatchesQuadratureWithinCeilingSlack) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<GaussianComponent> comps;
    const int k = 1 + static_cast<int>(rng() % 4);
    for (int j = 0; j < k; ++j) comps.push_back({0.1 + u01(rng), 1000.0 * u01(rng), std::pow(10.0 + 200.0 * u01(rng), 2)});
    auto d = DensityModel::mixture(comps, 1000);
    const double lo = -200.0 + 100.0 * u01(rng);
    const double hi = 1100.0 + 100.0 * u01(rng);
    double a = lo + (hi - lo) * u01(rng);
    double b = lo + (hi - lo) * u01(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1.0) b = a + 1.0;
    const std::uint64_t dmax = 1 + rng() % 1000;
    const double got = static_cast<double>(gap_size(d, a, b, dmax, lo, hi));
    EXPECT_LE(std::abs(got - quadrature_gap(d, a, b, static_cast<double>(dmax), lo, hi)), 1.0) << "trial " << trial;
  }
}

TEST(GapSize, AdditivityHasAtMostOneSlotOfSlack) {
  std::mt19937_64 rng(78);
  auto d = DensityModel::mixture({{0.5, 200.0, 900.0}, {0.5, 700.0, 2500.0}}, 1000);
  GapSizer sizer(d, 500, 0.0, 1000.0);
  for (int trial = 0; trial < 1000; ++trial) {
    double xs[3] = {static_cast<double>(rng() % 1000), static_cast<double>(rng() % 1000), static_cast<double>(rng() % 1000)};
    std::sort(xs, xs + 3);
    if (xs[0] == xs[1] || xs[1] == xs[2]) continue;
    const auto whole = sizer(xs[0], xs[2]);
    const auto parts = sizer(xs[0], xs[1]) + sizer(xs[1], xs[2]);
    EXPECT_LE(whole, parts);
    EXPECT_GE(whole + 1, parts);
  }
}

TEST(GapSize, SizerReusesDenominator) {
  auto d = DensityModel::mixture({{1.0, 50.0, 100.0}}, 1000);
  GapSizer sizer(d, 100, 0.0, 100.0);
  EXPECT_EQ(sizer(40.0, 60.0), gap_size(d, 40.0, 60.0, 100, 0.0, 100.0));
}
