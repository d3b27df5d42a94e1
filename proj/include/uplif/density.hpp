#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uplif/common.hpp"

namespace uplif {

struct GaussianComponent {
  double weight;
  double mean;
  double variance;
};

struct EmSettings {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // on the mean per-sample log-likelihood
  double variance_floor_factor = 1e-9;
};

// Estimate of the incoming-update distribution. Until enough samples are seen
// it is the uniform (Lebesgue) density, for which interval mass is length.
class DensityModel {
 public:
  static DensityModel uniform(std::size_t sample_count = 0);
  static DensityModel mixture(std::vector<GaussianComponent> components, std::size_t sample_count);

  bool fallback_uniform() const { return uniform_; }
  std::size_t sample_count() const { return sample_count_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  // Integral of the density over [a, b].
  double mass(double a, double b) const;
  double pdf(double x) const;
  std::size_t size_bytes() const { return components_.size() * sizeof(GaussianComponent); }

  // Per-iteration mean log-likelihood of the fit that produced this model.
  const std::vector<double>& log_likelihood_trace() const { return trace_; }

 private:
  friend DensityModel fit_update_distribution(std::span<const Key>, std::size_t, std::size_t,
                                              const EmSettings&);
  bool uniform_ = true;
  std::size_t sample_count_ = 0;
  std::vector<GaussianComponent> components_;
  std::vector<double> trace_;
};

// Uniform fallback below min_fit_samples, otherwise an EM-fitted mixture with
// quantile-seeded means (no randomness, so fits are reproducible).
DensityModel fit_update_distribution(std::span<const Key> observed_updates,
                                     std::size_t k_components, std::size_t min_fit_samples,
                                     const EmSettings& settings = {});

// Standard normal CDF through erfc.
double normal_cdf(double z);

// Placeholder count for the open interval (k_i, k_j):
//   ceil(d_max * mass(k_i, k_j) / mass(domain_lo, domain_hi)).
// Callers expanding a whole segment should use GapSizer so the denominator is
// evaluated once.
std::uint64_t gap_size(const DensityModel& d, double k_i, double k_j, std::uint64_t d_max,
                       double domain_lo, double domain_hi);

class GapSizer {
 public:
  GapSizer(const DensityModel& d, std::uint64_t d_max, double domain_lo, double domain_hi);
  std::uint64_t operator()(double k_i, double k_j) const;

 private:
  const DensityModel& density_;
  std::uint64_t d_max_;
  double total_;
  double lo_;
  double hi_;
  bool degenerate_;
};

}  // namespace uplif
