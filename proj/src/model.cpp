#include "uplif/model.hpp"

#include <algorithm>
#include <cmath>

namespace uplif {
namespace {

void check_keys(std::span<const Key> keys) {
  if (keys.empty()) throw Error("empty training set");
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i] <= keys[i - 1]) throw Error("keys not strictly sorted");
  }
}

// Greedy spline corridor: keep the widest cone of slopes from the last knot
// that stays within +-budget of every point seen since; when a point falls
// outside the cone, the previous point becomes a knot.
std::vector<SplinePoint> fit_corridor(std::span<const Key> keys, std::span<const double> pos,
                                      double budget) {
  std::vector<SplinePoint> knots;
  knots.push_back({keys[0], pos[0]});
  if (keys.size() == 1) return knots;

  const Key origin = keys[0];
  auto x_of = [origin](Key k) { return static_cast<double>(k - origin); };

  std::size_t knot = 0;
  double upper = 0.0;
  double lower = 0.0;
  bool open = false;
  for (std::size_t i = 1; i < keys.size(); ++i) {
    const double dx = x_of(keys[i]) - x_of(keys[knot]);
    const double dy = pos[i] - pos[knot];
    if (dx <= 0.0) {
      // Indistinguishable in double precision: force a knot break.
      knots.push_back({keys[i - 1], pos[i - 1]});
      knot = i - 1;
      open = false;
      continue;
    }
    const double slope = dy / dx;
    if (!open) {
      upper = (dy + budget) / dx;
      lower = (dy - budget) / dx;
      open = true;
      continue;
    }
    if (slope > upper || slope < lower) {
      knots.push_back({keys[i - 1], pos[i - 1]});
      knot = i - 1;
      const double ndx = x_of(keys[i]) - x_of(keys[knot]);
      const double ndy = pos[i] - pos[knot];
      if (ndx <= 0.0) {
        open = false;
        continue;
      }
      upper = (ndy + budget) / ndx;
      lower = (ndy - budget) / ndx;
      continue;
    }
    upper = std::min(upper, (dy + budget) / dx);
    lower = std::max(lower, (dy - budget) / dx);
  }
  if (knots.back().key != keys.back()) knots.push_back({keys.back(), pos.back()});
  return knots;
}

}  // namespace

Model Model::train(std::span<const Key> keys, const ModelConfig& cfg) {
  std::vector<double> pos(keys.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<double>(i);
  return train(keys, pos, cfg);
}

Model Model::train(std::span<const Key> keys, std::span<const double> positions,
                   const ModelConfig& cfg) {
  check_keys(keys);
  if (positions.size() != keys.size()) throw Error("position count mismatch");
  if (cfg.spline_error_budget < 1) throw Error("spline_error_budget must be >= 1");
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (!(positions[i] > positions[i - 1])) throw Error("positions not strictly increasing");
  }

  Model m;
  m.key_count_ = keys.size();
  // Half a position of headroom so rounding in predict cannot push the
  // certified bound past the budget.
  m.points_ = fit_corridor(keys, positions, static_cast<double>(cfg.spline_error_budget) - 0.5);

  double worst = 0.0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    worst = std::max(worst, std::abs(m.predict(keys[i]) - positions[i]));
  }
  m.error_bound_ = static_cast<std::uint32_t>(std::ceil(worst));
  return m;
}

double Model::predict(Key k) const {
  if (k <= points_.front().key) return points_.front().position;
  if (k >= points_.back().key) return points_.back().position;
  auto it = std::upper_bound(points_.begin(), points_.end(), k,
                             [](Key probe, const SplinePoint& p) { return probe < p.key; });
  const SplinePoint& hi = *it;
  const SplinePoint& lo = *(it - 1);
  const double dx = static_cast<double>(hi.key - lo.key);
  const double t = static_cast<double>(k - lo.key);
  double y = lo.position + t * (hi.position - lo.position) / dx;
  // Clamping to the segment's own endpoints keeps adjacent segments ordered
  // under rounding.
  return std::clamp(y, lo.position, hi.position);
}

std::size_t Model::size_bytes() const {
  return points_.size() * sizeof(SplinePoint) + sizeof(error_bound_) + sizeof(key_count_);
}

bool operator==(const Model& a, const Model& b) {
  if (a.error_bound_ != b.error_bound_ || a.key_count_ != b.key_count_) return false;
  if (a.points_.size() != b.points_.size()) return false;
  for (std::size_t i = 0; i < a.points_.size(); ++i) {
    if (a.points_[i].key != b.points_[i].key) return false;
    if (a.points_[i].position != b.points_[i].position) return false;
  }
  return true;
}

}  // namespace uplif
