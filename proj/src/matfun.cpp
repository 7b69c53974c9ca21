#include "siegelnet/matfun.hpp"

#include <cmath>

namespace siegelnet::matfun {
namespace {

double f_sqrt(double x) { return std::sqrt(x); }
double df_sqrt(double x) { return 0.5 / std::sqrt(x); }
double f_inv_sqrt(double x) { return 1.0 / std::sqrt(x); }
double df_inv_sqrt(double x) { return -0.5 / (x * std::sqrt(x)); }
double f_log(double x) { return std::log(x); }
double df_log(double x) { return 1.0 / x; }
double f_inv(double x) { return 1.0 / x; }
double df_inv(double x) { return -1.0 / (x * x); }
double f_exp(double x) { return std::exp(x); }

void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols || rows == 0) {
    fail(ErrorKind::ShapeMismatch, std::string(what) + " must be square and non-empty");
  }
}

template <typename M>
void require_finite(const M& a, const char* what) {
  if (!all_finite(a)) fail(ErrorKind::InvalidInput, std::string(what) + " has non-finite entries");
}

}  // namespace

bool all_finite(const Mat& a) { return a.allFinite(); }
bool all_finite(const CMat& a) { return a.real().allFinite() && a.imag().allFinite(); }

SpectralFunction spectral(MatFn f) {
  switch (f) {
    case MatFn::Sqrt: return {f_sqrt, df_sqrt};
    case MatFn::InvSqrt: return {f_inv_sqrt, df_inv_sqrt};
    case MatFn::Log: return {f_log, df_log};
    case MatFn::Inv: return {f_inv, df_inv};
    case MatFn::Exp: return {f_exp, f_exp};
  }
  fail(ErrorKind::InvalidInput, "unknown matrix function");
}

RealSymMatrix::RealSymMatrix(const Mat& entries) {
  require_square(entries.rows(), entries.cols(), "RealSymMatrix");
  require_finite(entries, "RealSymMatrix");
  m_ = symmetrize(entries);
}

SPDMatrix::SPDMatrix(const Mat& entries) {
  require_square(entries.rows(), entries.cols(), "SPDMatrix");
  require_finite(entries, "SPDMatrix");
  m_ = symmetrize(entries);
  const double lo = sym_eig(m_).values(0);
  if (!(lo > kPdTol)) {
    fail(ErrorKind::NotPositiveDefinite, "min eigenvalue " + std::to_string(lo));
  }
}

ComplexSymMatrix::ComplexSymMatrix(const CMat& entries) {
  require_square(entries.rows(), entries.cols(), "ComplexSymMatrix");
  require_finite(entries, "ComplexSymMatrix");
  m_ = 0.5 * (entries + entries.transpose());
}

HPDMatrix::HPDMatrix(const CMat& entries) {
  require_square(entries.rows(), entries.cols(), "HPDMatrix");
  require_finite(entries, "HPDMatrix");
  m_ = hermitize(entries);
  const double lo = herm_eig(m_).values(0);
  if (!(lo > kPdTol)) {
    fail(ErrorKind::NotPositiveDefinite, "min eigenvalue " + std::to_string(lo));
  }
}

StiefelMatrix::StiefelMatrix(const Mat& entries) : m_(entries) {
  if (entries.rows() <= entries.cols() || entries.cols() == 0) {
    fail(ErrorKind::ShapeMismatch, "Stiefel matrix needs rows > cols >= 1");
  }
  require_finite(entries, "StiefelMatrix");
  const Mat gram = entries.transpose() * entries;
  if ((gram - Mat::Identity(gram.rows(), gram.cols())).norm() > 1e-10) {
    fail(ErrorKind::InvalidInput, "columns are not orthonormal");
  }
}

SymEig sym_eig(const Mat& s) {
  require_square(s.rows(), s.cols(), "sym_eig input");
  require_finite(s, "sym_eig input");
  Eigen::SelfAdjointEigenSolver<Mat> solver(symmetrize(s));
  if (solver.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

SymEig sym_eig(const RealSymMatrix& s) { return sym_eig(s.mat()); }

HermEig herm_eig(const CMat& h) {
  require_square(h.rows(), h.cols(), "herm_eig input");
  require_finite(h, "herm_eig input");
  Eigen::SelfAdjointEigenSolver<CMat> solver(hermitize(h));
  if (solver.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Mat sym_apply(const Mat& s, const SpectralFunction& f) {
  const SymEig e = sym_eig(s);
  const Vec fv = e.values.unaryExpr(f.value);
  return e.vectors * fv.asDiagonal() * e.vectors.transpose();
}

Mat spd_fun(const SPDMatrix& p, MatFn f) {
  const SymEig e = sym_eig(p.mat());
  if (!(e.values(0) > kPdTol)) fail(ErrorKind::NotPositiveDefinite, "spd_fun on non-PD input");
  const Vec fv = e.values.unaryExpr(spectral(f).value);
  return symmetrize(e.vectors * fv.asDiagonal() * e.vectors.transpose());
}

CMat spd_fun(const HPDMatrix& p, MatFn f) {
  const HermEig e = herm_eig(p.mat());
  if (!(e.values(0) > kPdTol)) fail(ErrorKind::NotPositiveDefinite, "spd_fun on non-PD input");
  const Vec fv = e.values.unaryExpr(spectral(f).value);
  return hermitize(e.vectors * fv.cast<cplx>().asDiagonal() * e.vectors.adjoint());
}

SPDMatrix sym_exp(const RealSymMatrix& s) {
  return SPDMatrix(sym_apply(s.mat(), spectral(MatFn::Exp)));
}

CMat complex_inv(const CMat& m) {
  require_square(m.rows(), m.cols(), "complex_inv input");
  require_finite(m, "complex_inv input");
  Eigen::FullPivLU<CMat> lu(m);
  const double rc = lu.rcond();
  if (!lu.isInvertible() || !(rc > 1e-14)) {
    fail(ErrorKind::SingularMatrix, "reciprocal condition estimate " + std::to_string(rc));
  }
  return lu.inverse();
}

Mat loewner(const Vec& lam, const SpectralFunction& f) {
  const Eigen::Index n = lam.size();
  const double radius = lam.cwiseAbs().maxCoeff();
  const double gap_tol = kCoincidenceTol * std::max(radius, 1e-300);
  Mat l(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = lam(i) - lam(j);
      if (std::abs(d) < gap_tol) {
        l(i, j) = f.derivative(0.5 * (lam(i) + lam(j)));
      } else {
        l(i, j) = (f.value(lam(i)) - f.value(lam(j))) / d;
      }
    }
  }
  return l;
}

Mat sym_apply_jvp(const Mat& s, const SpectralFunction& f, const Mat& direction) {
  const SymEig e = sym_eig(s);
  const Mat inner = e.vectors.transpose() * symmetrize(direction) * e.vectors;
  const Mat l = loewner(e.values, f);
  return symmetrize(e.vectors * l.cwiseProduct(inner) * e.vectors.transpose());
}

Mat matfun_jvp(const SPDMatrix& p, MatFn f, const Mat& direction) {
  if (direction.rows() != p.dim() || direction.cols() != p.dim()) {
    fail(ErrorKind::ShapeMismatch, "direction shape");
  }
  return sym_apply_jvp(p.mat(), spectral(f), direction);
}

CMat matfun_jvp(const HPDMatrix& p, MatFn f, const CMat& direction) {
  if (direction.rows() != p.dim() || direction.cols() != p.dim()) {
    fail(ErrorKind::ShapeMismatch, "direction shape");
  }
  const HermEig e = herm_eig(p.mat());
  const CMat inner = e.vectors.adjoint() * hermitize(direction) * e.vectors;
  const Mat l = loewner(e.values, spectral(f));
  return hermitize(e.vectors * l.cast<cplx>().cwiseProduct(inner) * e.vectors.adjoint());
}

StiefelMatrix stiefel_qr(const Mat& m) {
  if (m.rows() <= m.cols() || m.cols() == 0) {
    fail(ErrorKind::ShapeMismatch, "stiefel_qr needs rows > cols >= 1");
  }
  require_finite(m, "stiefel_qr input");
  Eigen::HouseholderQR<Mat> qr(m);
  const Mat r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  const double scale = std::max(m.norm(), 1e-300);
  for (Eigen::Index k = 0; k < r.cols(); ++k) {
    if (std::abs(r(k, k)) <= 1e-12 * scale) fail(ErrorKind::RankDeficient, "column " + std::to_string(k));
  }
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  }
  return StiefelMatrix(q);
}

}  // namespace siegelnet::matfun
