#pragma once

// SPD manifold with the affine-invariant metric.

#include <cstdint>

#include "siegelnet/matfun.hpp"

namespace siegelnet::spd {

using matfun::SPDMatrix;

struct SPDPoint {
  SPDMatrix p;

  SPDPoint() = default;
  explicit SPDPoint(SPDMatrix value) : p(std::move(value)) {}
  explicit SPDPoint(const Mat& value) : p(value) {}

  const Mat& mat() const { return p.mat(); }
  Eigen::Index dim() const { return p.dim(); }
  static SPDPoint identity(Eigen::Index m) { return SPDPoint(Mat(Mat::Identity(m, m))); }
};

/// ‖log(p^-½ q p^-½)‖_F
double spd_distance(const SPDPoint& p, const SPDPoint& q);

/// g = p^½, so that g gᵀ = p.
Mat spd_canonical_rep(const SPDPoint& p);

/// p = sym_exp(S) with S symmetric, entries ~ N(0, 0.5).
SPDPoint spd_sample(Eigen::Index m, std::uint64_t seed);

}  // namespace siegelnet::spd
