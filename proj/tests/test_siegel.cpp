#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "siegelnet/siegel.hpp"
#include "test_util.hpp"

using namespace siegelnet;
using namespace siegelnet::siegel;
using testutil::rel;

namespace {

constexpr cplx I1{0.0, 1.0};

SiegelUpperPoint scalar_i(double a, Eigen::Index m = 1) {
  return SiegelUpperPoint(Mat::Zero(m, m), Mat(a * Mat::Identity(m, m)));
}

// Distance straight from the cross-ratio definition with a general complex
// eigensolver; shares nothing with the Hermitian path in the library.
double distance_oracle(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  const CMat X = x.complex(), Y = y.complex();
  const CMat r = (X - Y) * (X - Y.conjugate()).inverse() * (X.conjugate() - Y.conjugate()) *
                 (X.conjugate() - Y).inverse();
  Eigen::ComplexEigenSolver<CMat> es(r);
  double s = 0.0;
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    const double rk = std::max(0.0, es.eigenvalues()(k).real());
    const double l = std::log((1 + std::sqrt(rk)) / (1 - std::sqrt(rk)));
    s += l * l;
  }
  return std::sqrt(s);
}

double airm_oracle(const Mat& p, const Mat& q) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(q, p);
  return es.eigenvalues().array().log().matrix().norm();
}

}  // namespace

TEST(Cayley, Examples) {
  EXPECT_LE(cayley(SiegelUpperPoint::origin(3)).w().norm(), 1e-15);
  const CMat w = cayley(scalar_i(2.0)).w();
  EXPECT_LE(std::abs(w(0, 0) - 1.0 / 3.0), 1e-15);

  const SiegelUpperPoint back = inverse_cayley(SiegelDiskPoint(CMat::Constant(1, 1, 1.0 / 3.0)));
  EXPECT_NEAR(back.u()(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(back.v()(0, 0), 2.0, 1e-14);
  EXPECT_LE(rel(inverse_cayley(SiegelDiskPoint(CMat::Zero(2, 2))).v(), Mat::Identity(2, 2)), 1e-15);
}

TEST(Cayley, RoundTripsBothWays) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s);
    const SiegelUpperPoint y = inverse_cayley(cayley(x));
    EXPECT_LE(rel(y.complex(), x.complex()), 1e-9);
    const SiegelDiskPoint w = sample_disk_point(m, s);
    EXPECT_LE(rel(cayley(inverse_cayley(w)).w(), w.w()), 1e-9);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(inverse_cayley(w).v()).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Cayley, FaultInjectionBreaksRoundTrip) {
  const SiegelUpperPoint x = sample_upper_point(2, 7);
  fault::set_cayley_sign_flip(true);
  bool broken = false;
  try {
    broken = rel(inverse_cayley(cayley(x)).complex(), x.complex()) > 1e-6;
  } catch (const Error&) {
    broken = true;
  }
  fault::set_cayley_sign_flip(false);
  EXPECT_TRUE(broken);
  EXPECT_LE(rel(inverse_cayley(cayley(x)).complex(), x.complex()), 1e-9);
}

TEST(DiskPoint, RejectsOutsideDisk) {
  EXPECT_THROW(SiegelDiskPoint(CMat::Constant(1, 1, 1.0)), Error);
  EXPECT_THROW(SiegelDiskPoint(CMat::Constant(1, 1, 2.0 * I1)), Error);
}

TEST(CanonicalRep, Examples) {
  EXPECT_LE(rel(canonical_rep(SiegelUpperPoint::origin(2)).mat(), Mat::Identity(4, 4)), 1e-15);
  const Mat g = canonical_rep(SiegelUpperPoint(Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 4.0))).mat();
  Mat expected(2, 2);
  expected << 2.0, 0.5, 0.0, 0.5;
  EXPECT_LE(rel(g, expected), 1e-15);

  for (std::uint64_t s = 0; s < 100; ++s) {
    const SiegelUpperPoint x = sample_upper_point(1 + s % 5, s);
    const SiegelUpperPoint y = symplectic_action(canonical_rep(x), SiegelUpperPoint::origin(x.dim()));
    EXPECT_LE(rel(y.complex(), x.complex()), 1e-9);
  }
}

TEST(SymplecticAction, IdentityAndLeftAction) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 4);
    const SiegelUpperPoint x = sample_upper_point(m, s);
    EXPECT_LE(rel(symplectic_action(SymplecticMatrix::identity(m), x).complex(), x.complex()), 1e-14);
    const SymplecticMatrix a = sample_symplectic(m, 1000 + s), b = sample_symplectic(m, 2000 + s);
    const CMat lhs = symplectic_action(a * b, x).complex();
    const CMat rhs = symplectic_action(a, symplectic_action(b, x)).complex();
    EXPECT_LE(rel(lhs, rhs), 1e-8);
  }
}

TEST(Symplectic, ValidationAndSamples) {
  Mat bad = Mat::Identity(2, 2);
  bad(0, 0) = 2.0;
  EXPECT_THROW(SymplecticMatrix{bad}, Error);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const Mat k = sample_spo(m, s).mat();
    EXPECT_LE((k.transpose() * k - Mat::Identity(2 * m, 2 * m)).norm(), 1e-10);
    // symplectic form J is preserved
    Mat j = Mat::Zero(2 * m, 2 * m);
    j.topRightCorner(m, m) = Mat::Identity(m, m);
    j.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
    const Mat g = sample_symplectic(m, s).mat();
    EXPECT_LE((g.transpose() * j * g - j).norm(), 1e-8 * std::max(1.0, g.squaredNorm()));
    const SymplecticMatrix inv = sample_symplectic(m, s).inverse();
    EXPECT_LE(rel(Mat(inv.mat() * g), Mat::Identity(2 * m, 2 * m)), 1e-9);
  }
}

TEST(Sampling, Deterministic) {
  EXPECT_EQ(sample_upper_point(3, 42).complex(), sample_upper_point(3, 42).complex());
  EXPECT_EQ(sample_spo(3, 42).mat(), sample_spo(3, 42).mat());
  EXPECT_NE(sample_upper_point(3, 42).complex(), sample_upper_point(3, 43).complex());
}

TEST(CrossRatio, Examples) {
  const SiegelUpperPoint x = sample_upper_point(3, 5);
  EXPECT_LE(cross_ratio(x, x).norm(), 1e-14);
  const double a = 3.0;
  const CMat r = cross_ratio(scalar_i(1.0), scalar_i(a));
  EXPECT_LE(std::abs(r(0, 0) - std::pow((1 - a) / (1 + a), 2)), 1e-14);
}

TEST(CrossRatio, SpectrumRealInUnitInterval) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 777);
    const Vec general = cross_ratio_spectrum(x, y);
    const Vec herm = cross_ratio_eigenvalues(x, y);
    EXPECT_GE(general.minCoeff(), -1e-8);
    EXPECT_LT(general.maxCoeff(), 1.0);
    EXPECT_LE((general - herm).norm(), 1e-8);
  }
}

TEST(Vvd, Examples) {
  const SiegelUpperPoint x = sample_upper_point(3, 9);
  EXPECT_LE(vvd(x, x).norm(), 1e-12);
  const Vec v = vvd(scalar_i(1.0, 2), scalar_i(std::exp(1.0), 2)).components();
  EXPECT_NEAR(v(0), 1.0, 1e-12);
  EXPECT_NEAR(v(1), 1.0, 1e-12);
  EXPECT_NEAR(vvd_component(std::pow((std::exp(1.0) - 1) / (std::exp(1.0) + 1), 2)), 1.0, 1e-12);
}

TEST(Vvd, SortedSymmetricAndNormIsDistance) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 99);
    const Vec a = vvd(x, y).components(), b = vvd(y, x).components();
    EXPECT_LE((a - b).norm(), 1e-9);
    for (Eigen::Index i = 0; i < m; ++i) EXPECT_GE(a(i), 0.0);
    for (Eigen::Index i = 1; i < m; ++i) EXPECT_GE(a(i - 1), a(i));
    EXPECT_NEAR(a.norm(), distance(x, y), 1e-15);
  }
}

TEST(Vvd, OverflowNearBoundary) {
  EXPECT_THROW(
      {
        try {
          vvd(scalar_i(1.0), scalar_i(1e18));
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::NumericalOverflow);
          throw;
        }
      },
      Error);
}

TEST(Distance, ClosedForms) {
  for (Eigen::Index m = 1; m <= 4; ++m) {
    for (double a : {1.5, 4.0, 20.0}) {
      EXPECT_NEAR(distance(scalar_i(1.0, m), scalar_i(a, m)), std::sqrt(double(m)) * std::log(a), 1e-10);
    }
  }
}

TEST(Distance, MatchesIndependentOracle) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, 3 * s + 1);
    EXPECT_NEAR(distance(x, y), distance_oracle(x, y), 1e-8 * std::max(1.0, distance_oracle(x, y)));
  }
}

TEST(Distance, Axioms) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 1000),
                           z = sample_upper_point(m, s + 2000);
    EXPECT_LE(std::abs(distance(x, y) - distance(y, x)), 1e-9);
    EXPECT_LE(distance(x, x), 1e-9);
    EXPECT_LE(distance(x, z), distance(x, y) + distance(y, z) + 1e-8);
  }
}

TEST(Distance, SymplecticInvariance) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 5);
    const SymplecticMatrix g = sample_symplectic(m, s + 11);
    EXPECT_NEAR(distance(symplectic_action(g, x), symplectic_action(g, y)), distance(x, y), 1e-8);
  }
}

TEST(Distance, RestrictsToAirm) {
  testutil::Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index m = rng.integer(1, 5);
    const Mat v = rng.spd(m), w = rng.spd(m);
    const double d = distance(SiegelUpperPoint(Mat::Zero(m, m), v), SiegelUpperPoint(Mat::Zero(m, m), w));
    EXPECT_NEAR(d, airm_oracle(v, w), 1e-8);
  }
}

TEST(Realify, BlockLayout) {
  CMat z(1, 1);
  z(0, 0) = cplx(2.0, 3.0);
  Mat expected(2, 2);
  expected << 2, -3, 3, 2;
  EXPECT_EQ(realify(z), expected);
}
