#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uplif/common.hpp"

namespace uplif {

struct ModelConfig {
  // Maximum deviation (in positions) a knot-to-knot segment may have from any
  // training point. Controls the knot count.
  std::uint32_t spline_error_budget = 128;
  std::uint32_t min_keys_per_model = 1;
};

struct SplinePoint {
  Key key;
  double position;
};

// Monotone position predictor: a linear spline through a subset of the
// training points, with an exhaustively certified error bound.
class Model {
 public:
  // Positions are 0..n-1.
  static Model train(std::span<const Key> keys, const ModelConfig& cfg);
  // Positions must be strictly increasing (e.g. slot indices of a gapped array).
  static Model train(std::span<const Key> keys, std::span<const double> positions,
                     const ModelConfig& cfg);

  // Clamped to the trained key domain, so it is total and monotone.
  double predict(Key k) const;

  std::uint32_t error_bound() const { return error_bound_; }
  std::size_t key_count() const { return key_count_; }
  Key min_key() const { return points_.front().key; }
  Key max_key() const { return points_.back().key; }
  const std::vector<SplinePoint>& spline_points() const { return points_; }
  std::size_t size_bytes() const;

  friend bool operator==(const Model& a, const Model& b);

 private:
  Model() = default;

  std::vector<SplinePoint> points_;
  std::uint32_t error_bound_ = 0;
  std::size_t key_count_ = 0;
};

}  // namespace uplif
