#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "siegelnet/gyro.hpp"
#include "test_util.hpp"

using namespace siegelnet;
using namespace siegelnet::gyro;
using siegel::sample_spo;
using siegel::sample_upper_point;
using siegel::symplectic_action;
using testutil::rel;

namespace {

SiegelUpperPoint scalar_i(double a) { return SiegelUpperPoint(Mat::Zero(1, 1), Mat::Constant(1, 1, a)); }

// log(g gᵀ) for g = [[v^½, u v^-½], [0, v^-½]] written out by hand.
Mat log_gram_oracle(const SiegelUpperPoint& x) {
  const Eigen::Index m = x.dim();
  Eigen::SelfAdjointEigenSolver<Mat> ev(x.v());
  const Mat vs = ev.eigenvectors() * ev.eigenvalues().cwiseSqrt().asDiagonal() * ev.eigenvectors().transpose();
  const Mat vis = ev.eigenvectors() * ev.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * ev.eigenvectors().transpose();
  Mat g = Mat::Zero(2 * m, 2 * m);
  g.topLeftCorner(m, m) = vs;
  g.topRightCorner(m, m) = x.u() * vis;
  g.bottomRightCorner(m, m) = vis;
  Eigen::SelfAdjointEigenSolver<Mat> es(g * g.transpose());
  return es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

TEST(Oplus, Identities) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 4);
    const SiegelUpperPoint x = sample_upper_point(m, s), o = SiegelUpperPoint::origin(m);
    EXPECT_LE(rel(oplus(o, x).complex(), x.complex()), 1e-12);
    EXPECT_LE(rel(oplus(x, o).complex(), x.complex()), 1e-12);
    EXPECT_LE(rel(oplus(ominus(x), x).complex(), o.complex()), 1e-9);
    EXPECT_LE(rel(ominus(ominus(x)).complex(), x.complex()), 1e-9);
  }
  EXPECT_LE(rel(ominus(SiegelUpperPoint::origin(2)).complex(), SiegelUpperPoint::origin(2).complex()), 1e-15);
}

TEST(Ominus, ScalarValue) {
  const SiegelUpperPoint y = ominus(scalar_i(std::exp(1.0)));
  EXPECT_NEAR(y.u()(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(y.v()(0, 0), std::exp(-1.0), 1e-15);
}

TEST(Oplus, SpdFormula) {
  testutil::Rng rng(41);
  const Mat p = rng.spd(3), q = rng.spd(3);
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  const Mat ps = es.operatorSqrt();
  EXPECT_LE(rel(oplus(SPDPoint(p), SPDPoint(q)).mat(), ps * q * ps), 1e-12);
  EXPECT_LE(rel(ominus(SPDPoint(p)).mat(), p.inverse()), 1e-12);
}

TEST(Oplus, SignatureMismatch) {
  const ProductPoint a(std::vector<Factor>{sample_upper_point(2, 1)});
  const ProductPoint b(std::vector<Factor>{sample_upper_point(3, 1)});
  EXPECT_THROW(oplus(a, b), Error);
  EXPECT_THROW(inner_S(a, b), Error);
}

TEST(LogGram, MatchesHandWrittenRepresentative) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const SiegelUpperPoint x = sample_upper_point(1 + s % 5, s);
    EXPECT_LE(rel(log_gram(x), log_gram_oracle(x)), 1e-10);
  }
}

TEST(InnerS, Examples) {
  const SiegelUpperPoint y = sample_upper_point(2, 3);
  EXPECT_NEAR(inner_S(SiegelUpperPoint::origin(2), y), 0.0, 1e-12);
  const SiegelUpperPoint e = scalar_i(std::exp(1.0));
  EXPECT_NEAR(inner_S(e, e), 2.0, 1e-12);
  EXPECT_NEAR(norm_S(SiegelUpperPoint::origin(3)), 0.0, 1e-12);
}

TEST(InnerS, SymmetricAndKInvariant) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 300);
    const double v = inner_S(x, y);
    EXPECT_NEAR(inner_S(y, x), v, 1e-10);
    const auto k = sample_spo(m, s + 600);
    EXPECT_NEAR(inner_S(symplectic_action(k, x), symplectic_action(k, y)), v, 1e-8);
  }
}

TEST(NormS, RatioToDistanceIsSqrtTwo) {
  // ⊖(iI) ⊕ (e·iI) in the scalar case: norm √2, distance 1
  const double n = norm_S(oplus(ominus(SiegelUpperPoint::origin(1)), scalar_i(std::exp(1.0))));
  EXPECT_NEAR(n, std::sqrt(2.0), 1e-12);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const SiegelUpperPoint x = sample_upper_point(m, s), y = sample_upper_point(m, s + 123);
    const double d = siegel::distance(x, y);
    if (d < 1e-3) continue;
    EXPECT_NEAR(norm_S(oplus(ominus(x), y)) / d, std::sqrt(2.0), 1e-8);
  }
}

TEST(Product, ReducesToSingleFactor) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const SiegelUpperPoint x = sample_upper_point(3, s), y = sample_upper_point(3, s + 1);
    const ProductPoint px(std::vector<Factor>{x}), py(std::vector<Factor>{y});
    EXPECT_EQ(inner_S(px, py), inner_S(x, y));
    EXPECT_EQ(norm_S(px), norm_S(x));
    const auto sum = oplus(px, py);
    EXPECT_EQ(std::get<SiegelUpperPoint>(sum.factors()[0]).complex(), oplus(x, y).complex());
  }
}

TEST(Product, SumsOverFactors) {
  const SiegelUpperPoint x = sample_upper_point(2, 1), y = sample_upper_point(2, 2);
  const SPDPoint p = spd::spd_sample(3, 1), q = spd::spd_sample(3, 2);
  const ProductPoint a(std::vector<Factor>{p, x}), b(std::vector<Factor>{q, y});
  EXPECT_NEAR(inner_S(a, b), inner_S(p, q) + inner_S(x, y), 1e-12);
  const Signature sig = a.signature();
  ASSERT_EQ(sig.size(), 2u);
  EXPECT_EQ(sig[0].kind, FactorKind::Spd);
  EXPECT_EQ(sig[1].dim, 2);
  EXPECT_NEAR(norm_S(ProductPoint::origin(sig)), 0.0, 1e-15);
}
