#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "siegelnet/layers.hpp"
#include "test_util.hpp"

using namespace siegelnet;
using namespace siegelnet::layers;
using siegel::sample_upper_point;
using testutil::rel;

namespace {

SiegelUpperPoint scalar_i(double a) { return SiegelUpperPoint(Mat::Zero(1, 1), Mat::Constant(1, 1, a)); }

double min_eig(const Mat& a) { return Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().minCoeff(); }

Mat log_spd(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  return es.eigenvectors() * es.eigenvalues().array().log().matrix().asDiagonal() * es.eigenvectors().transpose();
}
Mat exp_sym(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().transpose();
}

// Point on the straight path between x0 and x1 in (u, log v) coordinates.
SiegelUpperPoint path(const SiegelUpperPoint& x0, const SiegelUpperPoint& x1, double t) {
  return SiegelUpperPoint(Mat((1 - t) * x0.u() + t * x1.u()), exp_sym((1 - t) * log_spd(x0.v()) + t * log_spd(x1.v())));
}

Vec unit_chamber(testutil::Rng& rng, Eigen::Index m) {
  Vec d(m);
  for (Eigen::Index i = 0; i < m; ++i) d(i) = std::abs(rng.normal()) + 1e-3;
  std::sort(d.begin(), d.end(), std::greater<>());
  return d / d.norm();
}

}  // namespace

TEST(QLogit, ScalarHandValues) {
  const QHyperplane h{scalar_i(std::exp(1.0)), SiegelUpperPoint::origin(1)};
  EXPECT_NEAR(q_distance(scalar_i(std::exp(1.0)), h), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(q_logit(scalar_i(std::exp(1.0)), h), 2.0, 1e-12);
  EXPECT_NEAR(q_logit(scalar_i(std::exp(-1.0)), h), -2.0, 1e-12);
  EXPECT_NEAR(q_denominator(h), std::sqrt(2.0), 1e-12);
}

TEST(QLogit, VanishesAtAnchorAndMatchesDistance) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const QHyperplane h{sample_upper_point(m, s), sample_upper_point(m, s + 1)};
    EXPECT_LE(q_distance(h.p, h), 1e-12);
    const SiegelUpperPoint x = sample_upper_point(m, s + 2);
    EXPECT_NEAR(std::abs(q_logit(x, h)), q_distance(x, h) * q_denominator(h), 1e-9);
    // the logit is the gyro inner product of ⊖p ⊕ x with a
    EXPECT_NEAR(q_logit(x, h), gyro::inner_S(gyro::oplus(gyro::ominus(h.p), x), h.a), 1e-8);
  }
}

TEST(QDistance, DegenerateAtOrigin) {
  const QHyperplane h{SiegelUpperPoint::origin(2), sample_upper_point(2, 1)};
  try {
    q_distance(sample_upper_point(2, 2), h);
    ADD_FAILURE() << "expected DegenerateHyperplane";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateHyperplane);
  }
}

TEST(QDistance, ZeroOnConstructedHyperplanePoints) {
  int found = 0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 3);
    const QHyperplane h{sample_upper_point(m, 10 * s), sample_upper_point(m, 10 * s + 1)};
    const SiegelUpperPoint x0 = gyro::oplus(h.p, h.a);
    const SiegelUpperPoint x1 = gyro::oplus(h.p, gyro::ominus(h.a));
    // membership residual evaluated through gyro ops, not through layers
    auto f = [&](double t) { return gyro::inner_S(gyro::oplus(gyro::ominus(h.p), path(x0, x1, t)), h.a); };
    double lo = 0.0, hi = 1.0, flo = f(lo);
    if (flo * f(hi) > 0) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi), fm = f(mid);
      if ((fm > 0) == (flo > 0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    EXPECT_LE(q_distance(path(x0, x1, 0.5 * (lo + hi)), h), 1e-8);
    ++found;
  }
  EXPECT_GE(found, 20);
}

TEST(QProduct, ReductionAndHandValue) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const QHyperplane h{sample_upper_point(3, s), sample_upper_point(3, s + 1)};
    const ProductQHyperplane ph{ProductPoint(std::vector<gyro::Factor>{h.a}), ProductPoint(std::vector<gyro::Factor>{h.p})};
    const SiegelUpperPoint x = sample_upper_point(3, s + 2);
    const ProductPoint px(std::vector<gyro::Factor>{x});
    EXPECT_NEAR(q_product_logit(px, ph), q_logit(x, h), 1e-12);
    EXPECT_NEAR(q_product_distance(px, ph), q_distance(x, h), 1e-12);
  }
  const SiegelUpperPoint e = scalar_i(std::exp(1.0)), o = SiegelUpperPoint::origin(1);
  const ProductQHyperplane ph{ProductPoint(std::vector<gyro::Factor>{e, e}), ProductPoint(std::vector<gyro::Factor>{o, o})};
  const ProductPoint x(std::vector<gyro::Factor>{e, e});
  EXPECT_NEAR(q_product_distance(x, ph), 2.0, 1e-12);
  EXPECT_NEAR(q_product_distance(ph.p, ph), 0.0, 1e-12);
}

TEST(QProduct, SpdFactorsAndMismatch) {
  const spd::SPDPoint a = spd::spd_sample(2, 1), p = spd::spd_sample(2, 2), x = spd::spd_sample(2, 3);
  const ProductQHyperplane ph{ProductPoint(std::vector<gyro::Factor>{a}), ProductPoint(std::vector<gyro::Factor>{p})};
  const double expected = gyro::inner_S(gyro::oplus(gyro::ominus(p), x), a);
  EXPECT_NEAR(q_product_logit(ProductPoint(std::vector<gyro::Factor>{x}), ph), expected, 1e-10);
  EXPECT_THROW(q_product_logit(ProductPoint(std::vector<gyro::Factor>{sample_upper_point(2, 1)}), ph), Error);
}

TEST(VLogit, HandValueAndBound) {
  const VHyperplane h{SiegelUpperPoint::origin(1), ChamberDirection(Vec::Ones(1)), 1.0};
  EXPECT_NEAR(v_logit(scalar_i(std::exp(1.0)), h), 1.0, 1e-12);
  EXPECT_NEAR(v_logit(h.p, h), 0.0, 1e-12);

  testutil::Rng rng(51);
  for (std::uint64_t s = 0; s < 300; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const VHyperplane vh{sample_upper_point(m, s), ChamberDirection(unit_chamber(rng, m)), rng.normal()};
    const SiegelUpperPoint x = sample_upper_point(m, s + 50);
    const double b = v_bound(x, vh);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, siegel::distance(x, vh.p) + 1e-10);
    EXPECT_NEAR(v_logit(x, vh), vh.scale * b, 1e-12);
  }
}

TEST(ChamberDirection, Validation) {
  EXPECT_THROW(ChamberDirection((Vec(2) << 0.6, 0.8).finished()), Error);
  EXPECT_THROW(ChamberDirection((Vec(2) << 1.0, -0.0001).finished()), Error);
  EXPECT_THROW(ChamberDirection((Vec(2) << 1.0, 1.0).finished()), Error);
  EXPECT_NO_THROW(ChamberDirection((Vec(2) << 0.8, 0.6).finished()));
}

TEST(Afc, IdentityOriginAndTwoPaths) {
  const SiegelUpperPoint x = sample_upper_point(3, 4);
  const AFCParams id{matfun::RealSymMatrix(Mat::Zero(3, 3)), matfun::SPDMatrix(Mat::Identity(3, 3))};
  EXPECT_LE(rel(afc_forward(x, id).complex(), x.complex()), 1e-14);

  testutil::Rng rng(52);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 5);
    const AFCParams th{matfun::RealSymMatrix(rng.sym(m)), matfun::SPDMatrix(rng.spd(m))};
    const SiegelUpperPoint ab(th.a.mat(), th.b.mat());
    EXPECT_LE(rel(afc_forward(SiegelUpperPoint::origin(m), th).complex(), ab.complex()), 1e-12);
    const SiegelUpperPoint y = sample_upper_point(m, s);
    const SiegelUpperPoint out = afc_forward(y, th);
    EXPECT_GT(min_eig(out.v()), 0.0);
    EXPECT_LE(rel(out.complex(), siegel::symplectic_action(siegel::canonical_rep(ab), y).complex()), 1e-9);
    // u = 0, a = 0: the SPD congruence b^½ v b^½
    const AFCParams th0{matfun::RealSymMatrix(Mat::Zero(m, m)), th.b};
    const SiegelUpperPoint pure(Mat::Zero(m, m), y.v());
    Eigen::SelfAdjointEigenSolver<Mat> es(th.b.mat());
    const Mat bs = es.operatorSqrt();
    EXPECT_LE(rel(afc_forward(pure, th0).v(), bs * y.v() * bs), 1e-10);
  }
}

TEST(Dfc, ProjectionAndClosure) {
  const SiegelUpperPoint x = sample_upper_point(4, 8);
  const DFCParams proj{matfun::RealSymMatrix(Mat::Zero(2, 2)), matfun::StiefelMatrix(Mat::Identity(4, 2))};
  const SiegelUpperPoint y = dfc_forward(x, proj);
  EXPECT_LE(rel(y.complex(), x.complex().topLeftCorner(2, 2)), 1e-15);
  EXPECT_LE(rel(dfc_forward(SiegelUpperPoint::origin(4), proj).complex(), SiegelUpperPoint::origin(2).complex()), 1e-15);

  testutil::Rng rng(53);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(s % 5);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(s % (m - 1));
    const DFCParams th{matfun::RealSymMatrix(rng.sym(k)), matfun::stiefel_qr(rng.gauss(m, k))};
    const SiegelUpperPoint xi = sample_upper_point(m, s);
    const SiegelUpperPoint out = dfc_forward(xi, th);
    ASSERT_EQ(out.dim(), k);
    EXPECT_GT(min_eig(out.v()), 0.0);
    const Mat b = th.b.mat();
    EXPECT_LE(rel(out.v(), b.transpose() * xi.v() * b), 1e-12);
    EXPECT_LE(rel(out.u(), b.transpose() * xi.u() * b + th.a.mat()), 1e-12);
  }
}

TEST(MlrLogits, SymmetryAndSoftmax) {
  const QHyperplane h{sample_upper_point(2, 1), sample_upper_point(2, 2)};
  const Vec same = mlr_logits(sample_upper_point(2, 3), {h, h, h});
  EXPECT_EQ(same(0), same(1));
  EXPECT_EQ(same(1), same(2));
  const Vec pr = softmax(same);
  EXPECT_NEAR(pr(0), 1.0 / 3.0, 1e-15);

  // mirrored scalar heads give (ℓ, −ℓ): probabilities (σ(2ℓ), 1 − σ(2ℓ))
  const QHyperplane up{scalar_i(std::exp(1.0)), SiegelUpperPoint::origin(1)};
  const QHyperplane down{scalar_i(std::exp(-1.0)), SiegelUpperPoint::origin(1)};
  const Vec l = mlr_logits(scalar_i(std::exp(0.3)), {up, down});
  EXPECT_NEAR(l(0), -l(1), 1e-12);
  EXPECT_NEAR(softmax(l)(0), 1.0 / (1.0 + std::exp(-2.0 * l(0))), 1e-12);
}

TEST(MlrLogits, ArgmaxAtOwnAnchor) {
  // class j's anchor p_j sits on the positive side of every other head
  const SiegelUpperPoint o = SiegelUpperPoint::origin(1);
  const QHyperplane h0{scalar_i(std::exp(1.0)), scalar_i(std::exp(1.0))};
  const QHyperplane h1{scalar_i(std::exp(-1.0)), o};
  const Vec l = mlr_logits(scalar_i(std::exp(1.0)), {h0, h1});
  EXPECT_NEAR(l(0), 0.0, 1e-12);
  EXPECT_LT(l(1), 0.0);
  int arg = 0;
  l.maxCoeff(&arg);
  EXPECT_EQ(arg, 0);
}

TEST(MlrLogits, Errors) {
  const QHyperplane q{sample_upper_point(2, 1), sample_upper_point(2, 2)};
  const VHyperplane v{sample_upper_point(2, 3), ChamberDirection((Vec(2) << 0.8, 0.6).finished()), 1.0};
  for (const auto& heads : {std::vector<Head>{q, v}, std::vector<Head>{q}}) {
    try {
      mlr_logits(sample_upper_point(2, 4), heads);
      ADD_FAILURE() << "expected ConfigError";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
  }
}
