#include "siegelnet/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace siegelnet::diff {
namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) fail(ErrorKind::InvalidInput, "invalid tape variable");
  return *a.tape;
}

void same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::ShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

void square(Var a, const char* op) {
  if (a.rows() != a.cols()) fail(ErrorKind::ShapeMismatch, std::string(op) + ": operand must be square");
}

Mat one(double x) { return Mat::Constant(1, 1, x); }

}  // namespace

Var operator+(Var a, Var b) {
  same_shape(a, b, "add");
  return tape_of(a).record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var operator-(Var a, Var b) {
  same_shape(a, b, "sub");
  return tape_of(a).record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var operator-(Var a) {
  return tape_of(a).record(-a.value(), {a}, [a](Tape& t, const Mat& g) { t.accumulate(a, -g); });
}

Var operator*(double s, Var a) {
  return tape_of(a).record(s * a.value(), {a}, [a, s](Tape& t, const Mat& g) { t.accumulate(a, s * g); });
}

Var operator*(Var a, Var b) {
  if (a.cols() != b.rows()) fail(ErrorKind::ShapeMismatch, "matmul: inner dimensions differ");
  return tape_of(a).record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var transpose(Var a) {
  return tape_of(a).record(a.value().transpose(), {a},
                           [a](Tape& t, const Mat& g) { t.accumulate(a, g.transpose()); });
}

Var inverse(Var a) {
  square(a, "inverse");
  Eigen::PartialPivLU<Mat> lu(a.value());
  const Mat inv = lu.inverse();
  if (!inv.allFinite() || !(lu.rcond() > 1e-14)) fail(ErrorKind::SingularMatrix, "inverse of a singular matrix");
  return tape_of(a).record(inv, {a}, [a, inv](Tape& t, const Mat& g) {
    t.accumulate(a, -inv.transpose() * g * inv.transpose());
  });
}

Var symmetrize(Var a) {
  square(a, "symmetrize");
  return tape_of(a).record(matfun::symmetrize(a.value()), {a},
                           [a](Tape& t, const Mat& g) { t.accumulate(a, matfun::symmetrize(g)); });
}

Var add_identity(Var a, double c) {
  square(a, "add_identity");
  Mat v = a.value();
  v.diagonal().array() += c;
  return tape_of(a).record(std::move(v), {a}, [a](Tape& t, const Mat& g) { t.accumulate(a, g); });
}

Var sym_fun(Var a, const matfun::SpectralFunction& f) {
  square(a, "sym_fun");
  const matfun::SymEig e = matfun::sym_eig(a.value());
  const Vec fv = e.values.unaryExpr(f.value);
  if (!fv.allFinite()) fail(ErrorKind::NotPositiveDefinite, "spectral function undefined on the spectrum");
  Mat out = matfun::symmetrize(e.vectors * fv.asDiagonal() * e.vectors.transpose());
  return tape_of(a).record(std::move(out), {a}, [a, e, f](Tape& t, const Mat& g) {
    const Mat inner = e.vectors.transpose() * matfun::symmetrize(g) * e.vectors;
    const Mat l = matfun::loewner(e.values, f);
    t.accumulate(a, matfun::symmetrize(e.vectors * l.cwiseProduct(inner) * e.vectors.transpose()));
  });
}

Var sym_fun(Var a, matfun::MatFn f) {
  if (f != matfun::MatFn::Exp) {
    const double lo = matfun::sym_eig(a.value()).values(0);
    if (!(lo > matfun::kPdTol)) fail(ErrorKind::NotPositiveDefinite, "min eigenvalue " + std::to_string(lo));
  }
  return sym_fun(a, matfun::spectral(f));
}

Var sym_eigvals(Var a) {
  square(a, "sym_eigvals");
  const matfun::SymEig e = matfun::sym_eig(a.value());
  return tape_of(a).record(Mat(e.values), {a}, [a, e](Tape& t, const Mat& g) {
    t.accumulate(a, e.vectors * g.col(0).asDiagonal() * e.vectors.transpose());
  });
}

Var trace(Var a) {
  square(a, "trace");
  const Eigen::Index n = a.rows();
  return tape_of(a).record(one(a.value().trace()), {a},
                           [a, n](Tape& t, const Mat& g) { t.accumulate(a, g(0, 0) * Mat::Identity(n, n)); });
}

Var dot(Var a, Var b) {
  same_shape(a, b, "dot");
  return tape_of(a).record(one(a.value().cwiseProduct(b.value()).sum()), {a, b}, [a, b](Tape& t, const Mat& g) {
    if (t.requires_grad(a)) t.accumulate(a, g(0, 0) * t.value(b));
    if (t.requires_grad(b)) t.accumulate(b, g(0, 0) * t.value(a));
  });
}

Var sum(Var a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(one(a.value().sum()), {a},
                           [a, r, c](Tape& t, const Mat& g) { t.accumulate(a, Mat::Constant(r, c, g(0, 0))); });
}

Var elementwise(Var a, double (*f)(double), double (*df)(double)) {
  return tape_of(a).record(a.value().unaryExpr(f), {a}, [a, df](Tape& t, const Mat& g) {
    t.accumulate(a, g.cwiseProduct(t.value(a).unaryExpr(df)));
  });
}

Var sqrt(Var a) {
  return elementwise(
      a, [](double x) { return std::sqrt(x); }, [](double x) { return 0.5 / std::sqrt(x); });
}

Var abs(Var a) {
  return elementwise(
      a, [](double x) { return std::abs(x); }, [](double x) { return x < 0.0 ? -1.0 : 1.0; });
}

Var scale(Var a, Var s) {
  if (s.rows() != 1 || s.cols() != 1) fail(ErrorKind::ShapeMismatch, "scale factor must be 1x1");
  return tape_of(a).record(s.scalar() * a.value(), {a, s}, [a, s](Tape& t, const Mat& g) {
    if (t.requires_grad(a)) t.accumulate(a, t.value(s)(0, 0) * g);
    if (t.requires_grad(s)) t.accumulate(s, one(g.cwiseProduct(t.value(a)).sum()));
  });
}

Var assemble(Var a, Var b, Var c, Var d) {
  if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols()) {
    fail(ErrorKind::ShapeMismatch, "assemble: blocks not conformant");
  }
  const Eigen::Index r0 = a.rows(), c0 = a.cols(), r1 = c.rows(), c1 = b.cols();
  Mat out(r0 + r1, c0 + c1);
  out << a.value(), b.value(), c.value(), d.value();
  return tape_of(a).record(std::move(out), {a, b, c, d}, [=](Tape& t, const Mat& g) {
    t.accumulate(a, g.topLeftCorner(r0, c0));
    t.accumulate(b, g.topRightCorner(r0, c1));
    t.accumulate(c, g.bottomLeftCorner(r1, c0));
    t.accumulate(d, g.bottomRightCorner(r1, c1));
  });
}

Var block(Var a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols) {
  if (row < 0 || col < 0 || row + rows > a.rows() || col + cols > a.cols()) {
    fail(ErrorKind::ShapeMismatch, "block out of range");
  }
  const Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(a.value().block(row, col, rows, cols), {a}, [=](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(r, c);
    full.block(row, col, rows, cols) = g;
    t.accumulate(a, full);
  });
}

Var stack_scalars(const std::vector<Var>& items) {
  if (items.empty()) fail(ErrorKind::ShapeMismatch, "stack_scalars: empty");
  Mat out(static_cast<Eigen::Index>(items.size()), 1);
  for (std::size_t k = 0; k < items.size(); ++k) out(static_cast<Eigen::Index>(k), 0) = items[k].scalar();
  return tape_of(items.front()).record(std::move(out), items, [items](Tape& t, const Mat& g) {
    for (std::size_t k = 0; k < items.size(); ++k) t.accumulate(items[k], one(g(static_cast<Eigen::Index>(k), 0)));
  });
}

Var sym_from_vec(Var v, Eigen::Index m) {
  if (v.cols() != 1 || v.rows() != m * (m + 1) / 2) fail(ErrorKind::ShapeMismatch, "sym_from_vec: wrong length");
  Mat out(m, m);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j, ++k) out(i, j) = out(j, i) = v.value()(k, 0);
  }
  return tape_of(v).record(std::move(out), {v}, [v, m](Tape& t, const Mat& g) {
    Mat gv(m * (m + 1) / 2, 1);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j, ++idx) gv(idx, 0) = (i == j) ? g(i, i) : g(i, j) + g(j, i);
    }
    t.accumulate(v, gv);
  });
}

Var qr_q(Var a) {
  const Eigen::Index n = a.cols();
  const Mat q = matfun::stiefel_qr(a.value()).mat();
  const Mat r = q.transpose() * a.value();
  return tape_of(a).record(q, {a}, [a, q, r, n](Tape& t, const Mat& gq) {
    // Ā = (Q̄ + Q copyltu(M)) R⁻ᵀ with M = -Q̄ᵀQ.
    const Mat m = -gq.transpose() * q;
    Mat c = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) c(i, j) = c(j, i) = m(i, j);
    }
    const Mat lhs = gq + q * c;
    const Mat rt = r.triangularView<Eigen::Upper>();
    // X Rᵀ = lhs  <=>  R Xᵀ = lhsᵀ
    const Mat xt = rt.triangularView<Eigen::Upper>().solve(lhs.transpose());
    t.accumulate(a, xt.transpose());
  });
}

Var chamber_normalize(Var raw) {
  if (raw.cols() != 1) fail(ErrorKind::ShapeMismatch, "chamber_normalize expects a column");
  const Vec x = raw.value().col(0);
  const Eigen::Index n = x.size();
  const double norm = x.norm();
  if (!(norm > 1e-300)) {
    Mat e = Mat::Zero(n, 1);
    e(0, 0) = 1.0;
    return tape_of(raw).record(std::move(e), {raw}, [](Tape&, const Mat&) {});
  }
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return std::abs(x(i)) > std::abs(x(j)); });
  Mat y(n, 1);
  for (Eigen::Index k = 0; k < n; ++k) y(k, 0) = std::abs(x(perm[static_cast<std::size_t>(k)])) / norm;
  return tape_of(raw).record(y, {raw}, [raw, x, perm, norm, y](Tape& t, const Mat& g) {
    const double gy = g.col(0).dot(y.col(0));
    Mat gx(x.size(), 1);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const Eigen::Index i = perm[static_cast<std::size_t>(k)];
      const double sign = x(i) < 0.0 ? -1.0 : 1.0;
      gx(i, 0) = sign * g(k, 0) / norm - gy * x(i) / (norm * norm);
    }
    t.accumulate(raw, gx);
  });
}

Var softmax_xent(Var logits, Eigen::Index label) {
  if (logits.cols() != 1 || label < 0 || label >= logits.rows()) {
    fail(ErrorKind::ShapeMismatch, "softmax_xent: bad logits/label");
  }
  const Vec z = logits.value().col(0);
  const double mx = z.maxCoeff();
  const Vec e = (z.array() - mx).exp().matrix();
  const double lse = mx + std::log(e.sum());
  const Vec p = e / e.sum();
  return tape_of(logits).record(one(lse - z(label)), {logits}, [logits, p, label](Tape& t, const Mat& g) {
    Mat gz = p;
    gz(label, 0) -= 1.0;
    t.accumulate(logits, g(0, 0) * gz);
  });
}

CVar operator+(const CVar& a, const CVar& b) { return {a.re + b.re, a.im + b.im}; }
CVar operator-(const CVar& a, const CVar& b) { return {a.re - b.re, a.im - b.im}; }

CVar operator*(const CVar& a, const CVar& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

CVar conj(const CVar& a) { return {a.re, -a.im}; }

Var realify(const CVar& a) { return assemble(a.re, -a.im, a.im, a.re); }

CVar inverse(const CVar& a) {
  const Eigen::Index m = a.re.rows();
  const Var inv = inverse(realify(a));
  return {block(inv, 0, 0, m, m), block(inv, m, 0, m, m)};
}

CVar add_i_identity(const CVar& a, double c) { return {a.re, add_identity(a.im, c)}; }

}  // namespace siegelnet::diff
