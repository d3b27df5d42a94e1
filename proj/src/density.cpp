#include "uplif/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uplif {
namespace {

constexpr double kMassEpsilon = 1e-300;

double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double ceil_ratio(double scaled) {
  // Relative guard against results like 2.0000000000000004 from 10 * 0.2.
  return std::ceil(scaled - 1e-12 * std::max(1.0, scaled));
}

}  // namespace

DensityModel DensityModel::uniform(std::size_t sample_count) {
  DensityModel d;
  d.uniform_ = true;
  d.sample_count_ = sample_count;
  return d;
}

DensityModel DensityModel::mixture(std::vector<GaussianComponent> components,
                                   std::size_t sample_count) {
  if (components.empty()) throw Error("invalid component count");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0 || !(c.variance > 0.0)) throw Error("invalid mixture component");
    total += c.weight;
  }
  if (!(total > 0.0)) throw Error("invalid mixture weights");
  for (auto& c : components) c.weight /= total;
  DensityModel d;
  d.uniform_ = false;
  d.sample_count_ = sample_count;
  d.components_ = std::move(components);
  return d;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double DensityModel::mass(double a, double b) const {
  if (uniform_) return b - a;
  double m = 0.0;
  for (const auto& c : components_) {
    const double sd = std::sqrt(c.variance);
    m += c.weight * (normal_cdf((b - c.mean) / sd) - normal_cdf((a - c.mean) / sd));
  }
  return m;
}

double DensityModel::pdf(double x) const {
  if (uniform_) return 1.0;
  double p = 0.0;
  for (const auto& c : components_) p += c.weight * std::exp(log_normal_pdf(x, c.mean, c.variance));
  return p;
}

DensityModel fit_update_distribution(std::span<const Key> observed, std::size_t k,
                                     std::size_t min_fit_samples, const EmSettings& settings) {
  if (k == 0) throw Error("invalid component count");
  if (observed.size() < min_fit_samples || observed.empty()) {
    return DensityModel::uniform(observed.size());
  }

  const std::size_t n = observed.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(observed[i]);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double span = std::max(sorted.back() - sorted.front(), 1.0);
  const double floor = settings.variance_floor_factor * span * span;

  double mean_all = 0.0;
  for (double v : x) mean_all += v;
  mean_all /= static_cast<double>(n);
  double var_all = 0.0;
  for (double v : x) var_all += (v - mean_all) * (v - mean_all);
  var_all = std::max(var_all / static_cast<double>(n), floor);

  k = std::min(k, n);
  std::vector<GaussianComponent> comp(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
    const auto idx = std::min(n - 1, static_cast<std::size_t>(q * static_cast<double>(n)));
    comp[j] = {1.0 / static_cast<double>(k), sorted[idx],
               std::max(var_all / static_cast<double>(k * k), floor)};
  }

  std::vector<double> resp(n * k);
  std::vector<double> trace;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < settings.max_iterations; ++iter) {
    // E-step with log-sum-exp.
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double* r = &resp[i * k];
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        r[j] = comp[j].weight > 0.0
                   ? std::log(comp[j].weight) + log_normal_pdf(x[i], comp[j].mean, comp[j].variance)
                   : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, r[j]);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        r[j] = std::exp(r[j] - mx);
        s += r[j];
      }
      for (std::size_t j = 0; j < k; ++j) r[j] /= s;
      ll += mx + std::log(s);
    }
    ll /= static_cast<double>(n);
    trace.push_back(ll);
    if (std::abs(ll - prev) < settings.tolerance) break;
    prev = ll;

    // M-step.
    for (std::size_t j = 0; j < k; ++j) {
      double nj = 0.0;
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nj += resp[i * k + j];
        mu += resp[i * k + j] * x[i];
      }
      if (nj <= 0.0) {
        comp[j].weight = 0.0;
        continue;
      }
      mu /= nj;
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - mu;
        var += resp[i * k + j] * d * d;
      }
      comp[j] = {nj / static_cast<double>(n), mu, std::max(var / nj, floor)};
    }
  }

  std::erase_if(comp, [](const GaussianComponent& c) { return c.weight <= 0.0; });
  DensityModel d = DensityModel::mixture(std::move(comp), n);
  d.trace_ = std::move(trace);
  return d;
}

GapSizer::GapSizer(const DensityModel& d, std::uint64_t d_max, double lo, double hi)
    : density_(d), d_max_(d_max), total_(d.mass(lo, hi)), lo_(lo), hi_(hi) {
  degenerate_ = !(total_ > kMassEpsilon);
}

std::uint64_t GapSizer::operator()(double k_i, double k_j) const {
  if (!(k_i < k_j)) throw Error("empty interval");
  if (d_max_ == 0) return 0;
  double ratio;
  if (degenerate_) {
    // No measurable mass over the domain: spread uniformly instead.
    ratio = (hi_ > lo_) ? (k_j - k_i) / (hi_ - lo_) : 1.0;
  } else {
    ratio = density_.mass(k_i, k_j) / total_;
  }
  ratio = std::clamp(ratio, 0.0, 1.0);
  return static_cast<std::uint64_t>(ceil_ratio(static_cast<double>(d_max_) * ratio));
}

std::uint64_t gap_size(const DensityModel& d, double k_i, double k_j, std::uint64_t d_max,
                       double domain_lo, double domain_hi) {
  return GapSizer(d, d_max, domain_lo, domain_hi)(k_i, k_j);
}

}  // namespace uplif
