#include "siegelnet/diff/geometry.hpp"

#include <cmath>

namespace siegelnet::diff {
namespace {

using matfun::MatFn;

Var zeros(Tape& t, Eigen::Index r, Eigen::Index c) { return t.constant(Mat::Zero(r, c)); }

// h(r) = 4 artanh²(√r): squared distance contribution as a smooth function of
// the cross-ratio eigenvalue r (h(r) ~ 4r near 0).
double h_value(double r) {
  if (r <= 0.0) return 4.0 * r;
  if (r >= siegel::kMaxCrossRatio) return std::numeric_limits<double>::infinity();
  const double a = std::atanh(std::sqrt(r));
  return 4.0 * a * a;
}

double h_derivative(double r) {
  if (r <= 0.0) return 4.0;
  if (r < 1e-6) return 4.0 * (1.0 + r / 3.0 + r * r / 5.0) / (1.0 - r);
  const double s = std::sqrt(r);
  return 4.0 * std::atanh(s) / (s * (1.0 - r));
}

// g(r) = log((1+√r)/(1-√r)) = 2 artanh(√r)
double g_value(double r) { return siegel::vvd_component(std::max(r, 0.0)); }
double g_derivative(double r) {
  if (r <= 0.0) return 0.0;
  return 1.0 / (std::sqrt(r) * (1.0 - r));
}

void check_cross_ratio_range(Var h) {
  const double top = matfun::sym_eig(h.value()).values.maxCoeff();
  if (top >= siegel::kMaxCrossRatio) {
    fail(ErrorKind::NumericalOverflow, "cross-ratio eigenvalue " + std::to_string(top) + " too close to 1");
  }
}

/// G(x) = φ(x)φ(x)ᵀ in closed form.
Var gram(const TSiegel& x) {
  const Var vinv = inverse(x.v);
  const Var uvinv = x.u * vinv;
  const Var top_left = x.v + uvinv * x.u;
  return symmetrize(assemble(top_left, uvinv, transpose(uvinv), vinv));
}

}  // namespace

TSiegel constant(Tape& t, const siegel::SiegelUpperPoint& x) { return {t.constant(x.u()), t.constant(x.v())}; }
TSpd constant(Tape& t, const spd::SPDPoint& p) { return {t.constant(p.mat())}; }
TSiegel variable(Tape& t, const siegel::SiegelUpperPoint& x) { return {t.variable(x.u()), t.variable(x.v())}; }

TProduct constant(Tape& t, const gyro::ProductPoint& x) {
  TProduct out;
  for (const auto& f : x.factors()) {
    out.push_back(std::visit([&](const auto& p) -> TFactor { return constant(t, p); }, f));
  }
  return out;
}

siegel::SiegelUpperPoint value(const TSiegel& x) { return siegel::SiegelUpperPoint(x.u.value(), x.v.value()); }
spd::SPDPoint value(const TSpd& x) { return spd::SPDPoint(x.p.value()); }

CVar as_complex(const TSiegel& x) { return {x.u, x.v}; }

TSiegel from_complex(const CVar& z) { return {symmetrize(z.re), symmetrize(z.im)}; }

CVar cayley(const TSiegel& x) {
  const CVar z = as_complex(x);
  return add_i_identity(z, -1.0) * inverse(add_i_identity(z, 1.0));
}

TSiegel inverse_cayley(const CVar& w) {
  // i(I + w)(I - w)⁻¹
  Tape& t = *w.re.tape;
  const Eigen::Index m = w.re.rows();
  const Var id = t.constant(Mat::Identity(m, m));
  const CVar one_plus{id + w.re, w.im};
  const CVar one_minus{id - w.re, -w.im};
  const CVar prod = one_plus * inverse(one_minus);
  return from_complex(CVar{-prod.im, prod.re});
}

Var canonical_rep(const TSiegel& x) {
  const Var root = sym_fun(x.v, MatFn::Sqrt);
  const Var inv_root = sym_fun(x.v, MatFn::InvSqrt);
  return assemble(root, x.u * inv_root, zeros(*x.u.tape, x.dim(), x.dim()), inv_root);
}

TSiegel symplectic_action(Var s, const TSiegel& x) {
  const Eigen::Index m = x.dim();
  if (s.rows() != 2 * m || s.cols() != 2 * m) fail(ErrorKind::ShapeMismatch, "symplectic_action shape");
  const Var a = block(s, 0, 0, m, m), b = block(s, 0, m, m, m);
  const Var c = block(s, m, 0, m, m), d = block(s, m, m, m, m);
  const CVar num{a * x.u + b, a * x.v};
  const CVar den{c * x.u + d, c * x.v};
  return from_complex(num * inverse(den));
}

CVar cross_ratio(const TSiegel& x, const TSiegel& y) {
  const CVar zx = as_complex(x), zy = as_complex(y);
  const CVar zxb = conj(zx), zyb = conj(zy);
  return (zx - zy) * inverse(zx - zyb) * (zxb - zyb) * inverse(zxb - zy);
}

TSiegel translate_to_origin(Var base_inv_sqrt, Var base_u, const TSiegel& y) {
  const Var s = base_inv_sqrt;
  return {symmetrize(s * (y.u - base_u) * s), symmetrize(s * y.v * s)};
}

Var cross_ratio_hermitian(const TSiegel& y) {
  const CVar w = cayley(y);
  const Var rw = realify(w);
  return symmetrize(rw * transpose(rw));
}

Var distance_sq_from_origin(const TSiegel& y) {
  const Var h = cross_ratio_hermitian(y);
  check_cross_ratio_range(h);
  return 0.5 * trace(sym_fun(h, matfun::SpectralFunction{h_value, h_derivative}));
}

Var distance_sq(const TSiegel& x, const TSiegel& y) {
  return distance_sq_from_origin(translate_to_origin(sym_fun(x.v, MatFn::InvSqrt), x.u, y));
}

Var distance(const TSiegel& x, const TSiegel& y) { return sqrt(distance_sq(x, y)); }

Var vvd_from_origin(const TSiegel& y) {
  const Var h = cross_ratio_hermitian(y);
  check_cross_ratio_range(h);
  const Var ev = sym_eigvals(h);  // 2m ascending, pairs coincide
  const Eigen::Index m = y.dim();
  Mat pick = Mat::Zero(m, 2 * m);
  for (Eigen::Index j = 0; j < m; ++j) {
    pick(j, 2 * m - 1 - 2 * j) = 0.5;
    pick(j, 2 * m - 2 - 2 * j) = 0.5;
  }
  const Var r = h.tape->constant(pick) * ev;
  return elementwise(r, g_value, g_derivative);
}

Var vvd(const TSiegel& x, const TSiegel& y) {
  return vvd_from_origin(translate_to_origin(sym_fun(x.v, MatFn::InvSqrt), x.u, y));
}

Var spd_distance(const TSpd& p, const TSpd& q) {
  const Var s = sym_fun(p.p, MatFn::InvSqrt);
  const Var l = sym_fun(symmetrize(s * q.p * s), MatFn::Log);
  return sqrt(dot(l, l));
}

Var spd_canonical_rep(const TSpd& p) { return sym_fun(p.p, MatFn::Sqrt); }

Var log_gram(const TSiegel& x) { return sym_fun(gram(x), MatFn::Log); }
Var log_gram(const TSpd& p) { return sym_fun(p.p, MatFn::Log); }

TSiegel oplus(const TSiegel& x, const TSiegel& y) {
  // φ(x)[y] = v^½ y v^½ + u
  const Var r = sym_fun(x.v, MatFn::Sqrt);
  return {symmetrize(r * y.u * r + x.u), symmetrize(r * y.v * r)};
}

TSpd oplus(const TSpd& x, const TSpd& y) {
  const Var r = sym_fun(x.p, MatFn::Sqrt);
  return {symmetrize(r * y.p * r)};
}

TSiegel ominus(const TSiegel& x) {
  // φ(x)⁻¹[iI] = -v^-½ u v^-½ + i v⁻¹
  const Var s = sym_fun(x.v, MatFn::InvSqrt);
  return {symmetrize(-(s * x.u * s)), symmetrize(inverse(x.v))};
}

TSpd ominus(const TSpd& x) { return {symmetrize(inverse(x.p))}; }

Var inner_S(const TSiegel& x, const TSiegel& y) { return dot(log_gram(x), log_gram(y)); }
Var inner_S(const TSpd& x, const TSpd& y) { return dot(log_gram(x), log_gram(y)); }

Var inner_S(const TProduct& x, const TProduct& y) {
  if (x.size() != y.size() || x.empty()) fail(ErrorKind::ShapeMismatch, "inner_S product size mismatch");
  Var total;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const Var term = std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if (!std::holds_alternative<T>(y[j])) fail(ErrorKind::ShapeMismatch, "factor kind mismatch");
          return inner_S(a, std::get<T>(y[j]));
        },
        x[j]);
    total = total.valid() ? total + term : term;
  }
  return total;
}

Var norm_S(const TSiegel& x) {
  const Var l = log_gram(x);
  return sqrt(dot(l, l));
}

Var q_logit_prepared(const TSiegel& x, Var p_inv_sqrt, Var p_u, Var log_gram_a) {
  return dot(log_gram(translate_to_origin(p_inv_sqrt, p_u, x)), log_gram_a);
}

Var q_logit_prepared(const TSpd& x, Var p_inv_sqrt, Var log_a) {
  const Var l = sym_fun(symmetrize(p_inv_sqrt * x.p * p_inv_sqrt), MatFn::Log);
  return dot(l, log_a);
}

namespace {

void check_denominator(Var denom_sq) {
  if (!(std::sqrt(std::max(denom_sq.scalar(), 0.0)) > 1e-10)) {
    fail(ErrorKind::DegenerateHyperplane, "hyperplane direction a is at the origin");
  }
}

struct ProductTerms {
  Var numerator;
  Var denom_sq;
};

ProductTerms product_terms(const TProduct& x, const TProductQHyperplane& h) {
  if (x.size() != h.a.size() || x.size() != h.p.size() || x.empty()) {
    fail(ErrorKind::ShapeMismatch, "product hyperplane signature mismatch");
  }
  ProductTerms out;
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::visit(
        [&](const auto& xj) {
          using T = std::decay_t<decltype(xj)>;
          if (!std::holds_alternative<T>(h.a[j]) || !std::holds_alternative<T>(h.p[j])) {
            fail(ErrorKind::ShapeMismatch, "factor kind mismatch");
          }
          const auto& aj = std::get<T>(h.a[j]);
          const auto& pj = std::get<T>(h.p[j]);
          const Var la = log_gram(aj);
          Var num;
          if constexpr (std::is_same_v<T, TSiegel>) {
            num = q_logit_prepared(xj, sym_fun(pj.v, MatFn::InvSqrt), pj.u, la);
          } else {
            num = q_logit_prepared(xj, sym_fun(pj.p, MatFn::InvSqrt), la);
          }
          const Var dsq = dot(la, la);
          out.numerator = out.numerator.valid() ? out.numerator + num : num;
          out.denom_sq = out.denom_sq.valid() ? out.denom_sq + dsq : dsq;
        },
        x[j]);
  }
  return out;
}

}  // namespace

Var q_logit(const TSiegel& x, const TQHyperplane& h) {
  const Var la = log_gram(h.a);
  check_denominator(dot(la, la));
  return q_logit_prepared(x, sym_fun(h.p.v, MatFn::InvSqrt), h.p.u, la);
}

Var q_distance(const TSiegel& x, const TQHyperplane& h) {
  const Var la = log_gram(h.a);
  const Var dsq = dot(la, la);
  check_denominator(dsq);
  const Var num = q_logit_prepared(x, sym_fun(h.p.v, MatFn::InvSqrt), h.p.u, la);
  const Var inv_denom = elementwise(
      dsq, [](double s) { return 1.0 / std::sqrt(s); }, [](double s) { return -0.5 / (s * std::sqrt(s)); });
  return scale(abs(num), inv_denom);
}

Var q_product_logit(const TProduct& x, const TProductQHyperplane& h) {
  const ProductTerms t = product_terms(x, h);
  check_denominator(t.denom_sq);
  return t.numerator;
}

Var q_product_distance(const TProduct& x, const TProductQHyperplane& h) {
  const ProductTerms t = product_terms(x, h);
  check_denominator(t.denom_sq);
  const Var inv_denom = elementwise(
      t.denom_sq, [](double s) { return 1.0 / std::sqrt(s); }, [](double s) { return -0.5 / (s * std::sqrt(s)); });
  return scale(abs(t.numerator), inv_denom);
}

Var v_logit(const TSiegel& x, const TVHyperplane& h) {
  // vvd is symmetric in its arguments; translating by p lets callers share p's v^-½.
  const Var comps = vvd_from_origin(translate_to_origin(sym_fun(h.p.v, MatFn::InvSqrt), h.p.u, x));
  return scale(dot(comps, h.a_xi), h.scale);
}

TSiegel afc_prepared(const TSiegel& x, Var b_sqrt, Var a) {
  return {symmetrize(b_sqrt * x.u * b_sqrt + a), symmetrize(b_sqrt * x.v * b_sqrt)};
}

TSiegel afc_forward(const TSiegel& x, Var a, Var b) { return afc_prepared(x, sym_fun(b, MatFn::Sqrt), a); }

TSiegel dfc_forward(const TSiegel& x, Var a, Var b) {
  const Var bt = transpose(b);
  return {symmetrize(bt * x.u * b + a), symmetrize(bt * x.v * b)};
}

TSpd spd_translate(const TSpd& p, Var b_sqrt) { return {symmetrize(b_sqrt * p.p * b_sqrt)}; }

TSpd spd_bimap(const TSpd& p, Var b) { return {symmetrize(transpose(b) * p.p * b)}; }

}  // namespace siegelnet::diff
