#include "siegelnet/layers.hpp"

#include <cmath>

namespace siegelnet::layers {
namespace {

using gyro::SPDPoint;
using matfun::MatFn;

Mat spd_log(const Mat& s) { return matfun::spd_fun(matfun::SPDMatrix(s), MatFn::Log); }

/// log(φ(p)⁻¹ φ(x) φ(x)ᵀ φ(p)⁻ᵀ)
Mat translated_log_gram(const SiegelUpperPoint& x, const SiegelUpperPoint& p) {
  const Mat m = siegel::canonical_rep(p).inverse().mat() * siegel::canonical_rep(x).mat();
  return spd_log(m * m.transpose());
}

/// log(h⁻¹ g gᵀ h⁻ᵀ) with g = x^½, h = p^½.
Mat translated_log_gram(const SPDPoint& x, const SPDPoint& p) {
  const Mat h_inv = matfun::spd_fun(p.p, MatFn::InvSqrt);
  const Mat m = h_inv * spd::spd_canonical_rep(x);
  return spd_log(m * m.transpose());
}

struct QTerms {
  double numerator = 0.0;
  double denom_sq = 0.0;
};

QTerms product_terms(const ProductPoint& x, const ProductQHyperplane& h) {
  const auto sig = x.signature();
  if (sig != h.a.signature() || sig != h.p.signature()) {
    fail(ErrorKind::ShapeMismatch, "input " + gyro::to_string(sig) + " vs hyperplane " +
                                       gyro::to_string(h.a.signature()));
  }
  QTerms t;
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::visit(
        [&](const auto& xj) {
          using T = std::decay_t<decltype(xj)>;
          const auto& aj = std::get<T>(h.a.factors()[j]);
          const auto& pj = std::get<T>(h.p.factors()[j]);
          const Mat la = gyro::log_gram(aj);
          t.numerator += translated_log_gram(xj, pj).cwiseProduct(la).sum();
          t.denom_sq += la.squaredNorm();
        },
        x.factors()[j]);
  }
  return t;
}

double checked_denominator(double denom) {
  if (!(denom > kDegenerateTol)) {
    fail(ErrorKind::DegenerateHyperplane, "hyperplane direction a is at the origin");
  }
  return denom;
}

}  // namespace

ChamberDirection::ChamberDirection(const Vec& direction) : d_(direction) {
  if (d_.size() == 0 || !d_.allFinite()) fail(ErrorKind::InvalidInput, "chamber direction empty or non-finite");
  for (Eigen::Index k = 0; k < d_.size(); ++k) {
    if (d_(k) < 0.0) fail(ErrorKind::InvalidInput, "chamber direction has a negative component");
    if (k > 0 && d_(k) > d_(k - 1)) fail(ErrorKind::InvalidInput, "chamber direction not sorted descending");
  }
  if (std::abs(d_.norm() - 1.0) > 1e-9) fail(ErrorKind::InvalidInput, "chamber direction is not unit norm");
}

double q_denominator(const QHyperplane& h) { return gyro::log_gram(h.a).norm(); }

double q_denominator(const ProductQHyperplane& h) {
  double s = 0.0;
  for (const auto& f : h.a.factors()) {
    s += std::visit([](const auto& a) { return gyro::log_gram(a).squaredNorm(); }, f);
  }
  return std::sqrt(s);
}

double q_logit(const SiegelUpperPoint& x, const QHyperplane& h) {
  if (x.dim() != h.a.dim() || x.dim() != h.p.dim()) fail(ErrorKind::ShapeMismatch, "q_logit dimension mismatch");
  const Mat la = gyro::log_gram(h.a);
  checked_denominator(la.norm());
  return translated_log_gram(x, h.p).cwiseProduct(la).sum();
}

double q_distance(const SiegelUpperPoint& x, const QHyperplane& h) {
  if (x.dim() != h.a.dim() || x.dim() != h.p.dim()) fail(ErrorKind::ShapeMismatch, "q_distance dimension mismatch");
  const Mat la = gyro::log_gram(h.a);
  const double denom = checked_denominator(la.norm());
  return std::abs(translated_log_gram(x, h.p).cwiseProduct(la).sum()) / denom;
}

double q_product_logit(const ProductPoint& x, const ProductQHyperplane& h) {
  const QTerms t = product_terms(x, h);
  checked_denominator(std::sqrt(t.denom_sq));
  return t.numerator;
}

double q_product_distance(const ProductPoint& x, const ProductQHyperplane& h) {
  const QTerms t = product_terms(x, h);
  return std::abs(t.numerator) / checked_denominator(std::sqrt(t.denom_sq));
}

double v_bound(const SiegelUpperPoint& x, const VHyperplane& h) {
  if (h.a_xi.dim() != x.dim()) fail(ErrorKind::ShapeMismatch, "chamber direction dimension mismatch");
  return siegel::vvd(x, h.p).components().dot(h.a_xi.direction());
}

double v_logit(const SiegelUpperPoint& x, const VHyperplane& h) { return h.scale * v_bound(x, h); }

SiegelUpperPoint afc_forward(const SiegelUpperPoint& x, const AFCParams& theta) {
  if (theta.a.dim() != x.dim() || theta.b.dim() != x.dim()) fail(ErrorKind::ShapeMismatch, "AFC parameter dimension");
  const Mat r = matfun::spd_fun(theta.b, MatFn::Sqrt);
  return SiegelUpperPoint(Mat(r * x.u() * r + theta.a.mat()), Mat(r * x.v() * r));
}

SiegelUpperPoint dfc_forward(const SiegelUpperPoint& x, const DFCParams& theta) {
  const Mat& b = theta.b.mat();
  if (b.rows() != x.dim() || theta.a.dim() != b.cols()) fail(ErrorKind::ShapeMismatch, "DFC parameter dimension");
  return SiegelUpperPoint(Mat(b.transpose() * x.u() * b + theta.a.mat()), Mat(b.transpose() * x.v() * b));
}

Vec mlr_logits(const LayerInput& x, const std::vector<Head>& heads) {
  if (heads.size() < 2) fail(ErrorKind::ConfigError, "need at least two class heads");
  const std::size_t kind = heads.front().index();
  for (const auto& h : heads) {
    if (h.index() != kind) fail(ErrorKind::ConfigError, "mixed head kinds");
  }
  Vec out(static_cast<Eigen::Index>(heads.size()));
  for (std::size_t j = 0; j < heads.size(); ++j) {
    out(static_cast<Eigen::Index>(j)) = std::visit(
        [&](const auto& h) -> double {
          using H = std::decay_t<decltype(h)>;
          if constexpr (std::is_same_v<H, ProductQHyperplane>) {
            if (!std::holds_alternative<ProductPoint>(x)) fail(ErrorKind::ConfigError, "product head needs a product input");
            return q_product_logit(std::get<ProductPoint>(x), h);
          } else {
            if (!std::holds_alternative<SiegelUpperPoint>(x)) fail(ErrorKind::ConfigError, "Siegel head needs a Siegel input");
            if constexpr (std::is_same_v<H, QHyperplane>) return q_logit(std::get<SiegelUpperPoint>(x), h);
            else return v_logit(std::get<SiegelUpperPoint>(x), h);
          }
        },
        heads[j]);
  }
  return out;
}

Vec softmax(const Vec& logits) {
  const double mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

}  // namespace siegelnet::layers
