#pragma once

// Siegel upper space / Siegel disk geometry.

#include <cstdint>

#include "siegelnet/matfun.hpp"

namespace siegelnet::siegel {

using matfun::ComplexSymMatrix;
using matfun::RealSymMatrix;
using matfun::SPDMatrix;

/// x = u + iv with u symmetric and v SPD.
class SiegelUpperPoint {
 public:
  SiegelUpperPoint() = default;
  SiegelUpperPoint(const Mat& u, const Mat& v);
  SiegelUpperPoint(RealSymMatrix u, SPDMatrix v) : u_(std::move(u)), v_(std::move(v)) {}
  /// Splits a complex symmetric matrix into (Re, Im); Im must be PD.
  static SiegelUpperPoint from_complex(const CMat& x);
  static SiegelUpperPoint origin(Eigen::Index m);

  const Mat& u() const { return u_.mat(); }
  const Mat& v() const { return v_.mat(); }
  const SPDMatrix& v_spd() const { return v_; }
  Eigen::Index dim() const { return u_.dim(); }
  CMat complex() const;

 private:
  RealSymMatrix u_;
  SPDMatrix v_;
};

/// w complex symmetric with I - w wᴴ positive definite.
class SiegelDiskPoint {
 public:
  SiegelDiskPoint() = default;
  explicit SiegelDiskPoint(const CMat& w);

  const CMat& w() const { return w_.mat(); }
  Eigen::Index dim() const { return w_.dim(); }

 private:
  ComplexSymMatrix w_;
};

/// 2m x 2m real symplectic matrix [[a, b], [c, d]].
class SymplecticMatrix {
 public:
  SymplecticMatrix() = default;
  /// Validates abᵀ = baᵀ, cdᵀ = dcᵀ, adᵀ - bcᵀ = I within 1e-9 (scaled).
  explicit SymplecticMatrix(const Mat& s);
  static SymplecticMatrix identity(Eigen::Index m);

  const Mat& mat() const { return s_; }
  Eigen::Index dim() const { return s_.rows() / 2; }
  Mat a() const { return s_.topLeftCorner(dim(), dim()); }
  Mat b() const { return s_.topRightCorner(dim(), dim()); }
  Mat c() const { return s_.bottomLeftCorner(dim(), dim()); }
  Mat d() const { return s_.bottomRightCorner(dim(), dim()); }

  SymplecticMatrix operator*(const SymplecticMatrix& other) const;
  SymplecticMatrix inverse() const;

 private:
  Mat s_;
};

/// Weyl-chamber valued distance: nonnegative, sorted descending.
class VVDVector {
 public:
  VVDVector() = default;
  explicit VVDVector(const Vec& components);

  const Vec& components() const { return c_; }
  Eigen::Index dim() const { return c_.size(); }
  double norm() const { return c_.norm(); }

 private:
  Vec c_;
};

/// Largest admissible cross-ratio eigenvalue before the points are treated
/// as infinitely separated.
inline constexpr double kMaxCrossRatio = 1.0 - 1e-14;

SiegelDiskPoint cayley(const SiegelUpperPoint& x);
SiegelUpperPoint inverse_cayley(const SiegelDiskPoint& w);

/// φ(x) = [[v^½, u v^-½], [0, v^-½]], mapping iI to x.
SymplecticMatrix canonical_rep(const SiegelUpperPoint& x);

/// s[x] = (a x + b)(c x + d)⁻¹.
SiegelUpperPoint symplectic_action(const SymplecticMatrix& s, const SiegelUpperPoint& x);

CMat cross_ratio(const SiegelUpperPoint& x, const SiegelUpperPoint& y);

/// Spectrum of the cross-ratio from a general (non-Hermitian) eigensolver,
/// ascending. Imaginary parts above 1e-8 raise InvalidInput.
Vec cross_ratio_spectrum(const SiegelUpperPoint& x, const SiegelUpperPoint& y);

/// Cross-ratio eigenvalues via the Hermitian similarity R(x,y) ~ wᴴw with
/// w = cayley(φ(x)⁻¹[y]); ascending, clamped at 0.
Vec cross_ratio_eigenvalues(const SiegelUpperPoint& x, const SiegelUpperPoint& y);

VVDVector vvd(const SiegelUpperPoint& x, const SiegelUpperPoint& y);
double distance(const SiegelUpperPoint& x, const SiegelUpperPoint& y);

/// log((1 + √r) / (1 - √r)); the per-eigenvalue distance contribution.
double vvd_component(double r);

namespace fault {
/// Flips the sign convention inside cayley() so self-checks can prove they
/// catch a broken transform. Never set outside tests.
void set_cayley_sign_flip(bool on);
bool cayley_sign_flip();
}  // namespace fault

enum class SampleKind { UpperPoint, DiskPoint, Symplectic, Spo };

SiegelUpperPoint sample_upper_point(Eigen::Index m, std::uint64_t seed);
SiegelDiskPoint sample_disk_point(Eigen::Index m, std::uint64_t seed);
SymplecticMatrix sample_symplectic(Eigen::Index m, std::uint64_t seed);
/// [[a, b], [-b, a]] from a random unitary a + ib.
SymplecticMatrix sample_spo(Eigen::Index m, std::uint64_t seed);

/// Real and imaginary parts of 2m x 2m as block [[Re, -Im], [Im, Re]].
Mat realify(const CMat& z);

}  // namespace siegelnet::siegel
