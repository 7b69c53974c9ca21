#include "siegelnet/gyro.hpp"

#include <cmath>

namespace siegelnet::gyro {
namespace {

void require_same(const Signature& a, const Signature& b) {
  if (a != b) fail(ErrorKind::ShapeMismatch, "signature " + to_string(a) + " vs " + to_string(b));
}

template <typename Op>
ProductPoint zip(const ProductPoint& x, const ProductPoint& y, Op op) {
  require_same(x.signature(), y.signature());
  std::vector<Factor> out;
  out.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out.push_back(std::visit(
        [&](const auto& a) -> Factor {
          using T = std::decay_t<decltype(a)>;
          return op(a, std::get<T>(y.factors()[j]));
        },
        x.factors()[j]));
  }
  return ProductPoint(std::move(out));
}

}  // namespace

std::string to_string(const Signature& sig) {
  std::string s = "[";
  for (std::size_t j = 0; j < sig.size(); ++j) {
    if (j) s += ",";
    s += (sig[j].kind == FactorKind::Spd ? "spd" : "siegel");
    s += ":" + std::to_string(sig[j].dim);
  }
  return s + "]";
}

FactorSpec spec_of(const Factor& f) {
  return std::visit(
      [](const auto& p) -> FactorSpec {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SPDPoint>) return {FactorKind::Spd, p.dim()};
        else return {FactorKind::Siegel, p.dim()};
      },
      f);
}

ProductPoint::ProductPoint(std::vector<Factor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) fail(ErrorKind::ShapeMismatch, "product point needs at least one factor");
}

Signature ProductPoint::signature() const {
  Signature sig;
  for (const auto& f : factors_) sig.push_back(spec_of(f));
  return sig;
}

ProductPoint ProductPoint::origin(const Signature& sig) {
  std::vector<Factor> f;
  for (const auto& s : sig) {
    if (s.kind == FactorKind::Spd) f.emplace_back(SPDPoint::identity(s.dim));
    else f.emplace_back(SiegelUpperPoint::origin(s.dim));
  }
  return ProductPoint(std::move(f));
}

Mat log_gram(const SiegelUpperPoint& x) {
  const Mat g = siegel::canonical_rep(x).mat();
  return matfun::spd_fun(matfun::SPDMatrix(Mat(g * g.transpose())), matfun::MatFn::Log);
}

Mat log_gram(const SPDPoint& p) {
  // g = p^½ so g gᵀ = p.
  return matfun::spd_fun(p.p, matfun::MatFn::Log);
}

SiegelUpperPoint oplus(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "oplus dimension mismatch");
  const auto gh = siegel::canonical_rep(x) * siegel::canonical_rep(y);
  return siegel::symplectic_action(gh, SiegelUpperPoint::origin(x.dim()));
}

SPDPoint oplus(const SPDPoint& x, const SPDPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "oplus dimension mismatch");
  const Mat g = spd::spd_canonical_rep(x);
  const Mat h = spd::spd_canonical_rep(y);
  const Mat gh = g * h;
  return SPDPoint(Mat(gh * gh.transpose()));
}

ProductPoint oplus(const ProductPoint& x, const ProductPoint& y) {
  return zip(x, y, [](const auto& a, const auto& b) { return oplus(a, b); });
}

SiegelUpperPoint ominus(const SiegelUpperPoint& x) {
  return siegel::symplectic_action(siegel::canonical_rep(x).inverse(), SiegelUpperPoint::origin(x.dim()));
}

SPDPoint ominus(const SPDPoint& x) {
  const Mat g_inv = matfun::spd_fun(x.p, matfun::MatFn::InvSqrt);
  return SPDPoint(Mat(g_inv * g_inv.transpose()));
}

ProductPoint ominus(const ProductPoint& x) {
  std::vector<Factor> out;
  for (const auto& f : x.factors()) {
    out.push_back(std::visit([](const auto& a) -> Factor { return ominus(a); }, f));
  }
  return ProductPoint(std::move(out));
}

double inner_S(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "inner_S dimension mismatch");
  return log_gram(x).cwiseProduct(log_gram(y)).sum();
}

double inner_S(const SPDPoint& x, const SPDPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "inner_S dimension mismatch");
  return log_gram(x).cwiseProduct(log_gram(y)).sum();
}

double inner_S(const ProductPoint& x, const ProductPoint& y) {
  require_same(x.signature(), y.signature());
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    total += std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          return inner_S(a, std::get<T>(y.factors()[j]));
        },
        x.factors()[j]);
  }
  return total;
}

double norm_S(const SiegelUpperPoint& x) { return log_gram(x).norm(); }
double norm_S(const SPDPoint& x) { return log_gram(x).norm(); }
double norm_S(const ProductPoint& x) { return std::sqrt(std::max(inner_S(x, x), 0.0)); }

}  // namespace siegelnet::gyro
