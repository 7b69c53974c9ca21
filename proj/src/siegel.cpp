#include "siegelnet/siegel.hpp"

#include <atomic>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace siegelnet::siegel {
namespace {

const cplx kI(0.0, 1.0);

CMat identity_c(Eigen::Index m) { return CMat::Identity(m, m); }

Mat random_symmetric(Eigen::Index m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, stddev);
  Mat s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      s(i, j) = n(rng);
      s(j, i) = s(i, j);
    }
  }
  return s;
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// diagonal phases of R removed.
CMat random_unitary(Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMat z(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) z(i, j) = cplx(n(rng), n(rng));
  }
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ() * CMat::Identity(m, m);
  const CMat& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

}  // namespace

Mat realify(const CMat& z) {
  const Eigen::Index r = z.rows(), c = z.cols();
  Mat out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = z.real();
  out.topRightCorner(r, c) = -z.imag();
  out.bottomLeftCorner(r, c) = z.imag();
  out.bottomRightCorner(r, c) = z.real();
  return out;
}

SiegelUpperPoint::SiegelUpperPoint(const Mat& u, const Mat& v)
    : u_(u), v_(v) {
  if (u.rows() != v.rows()) fail(ErrorKind::ShapeMismatch, "u and v dimensions differ");
}

SiegelUpperPoint SiegelUpperPoint::from_complex(const CMat& x) {
  return SiegelUpperPoint(Mat(x.real()), Mat(x.imag()));
}

SiegelUpperPoint SiegelUpperPoint::origin(Eigen::Index m) {
  return SiegelUpperPoint(Mat::Zero(m, m), Mat::Identity(m, m));
}

CMat SiegelUpperPoint::complex() const {
  CMat x(dim(), dim());
  x.real() = u();
  x.imag() = v();
  return x;
}

SiegelDiskPoint::SiegelDiskPoint(const CMat& w) : w_(w) {
  const Eigen::Index m = w_.dim();
  const CMat gap = identity_c(m) - w_.mat() * w_.mat().adjoint();
  const double lo = matfun::herm_eig(gap).values(0);
  if (!(lo > matfun::kPdTol)) {
    fail(ErrorKind::InvalidInput, "I - w w^H not positive definite (min eig " + std::to_string(lo) + ")");
  }
}

SymplecticMatrix::SymplecticMatrix(const Mat& s) : s_(s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0 || s.rows() == 0) {
    fail(ErrorKind::ShapeMismatch, "symplectic matrix must be 2m x 2m");
  }
  if (!s.allFinite()) fail(ErrorKind::InvalidInput, "symplectic matrix has non-finite entries");
  const Mat A = a(), B = b(), C = c(), D = d();
  const double tol = 1e-9 * std::max(1.0, s.squaredNorm());
  const double e1 = (A * B.transpose() - B * A.transpose()).norm();
  const double e2 = (C * D.transpose() - D * C.transpose()).norm();
  const double e3 = (A * D.transpose() - B * C.transpose() - Mat::Identity(dim(), dim())).norm();
  if (e1 > tol || e2 > tol || e3 > tol) {
    fail(ErrorKind::InvalidInput, "matrix is not symplectic (residuals " + std::to_string(e1) + ", " +
                                      std::to_string(e2) + ", " + std::to_string(e3) + ")");
  }
}

SymplecticMatrix SymplecticMatrix::identity(Eigen::Index m) {
  return SymplecticMatrix(Mat::Identity(2 * m, 2 * m));
}

SymplecticMatrix SymplecticMatrix::operator*(const SymplecticMatrix& other) const {
  return SymplecticMatrix(Mat(s_ * other.s_));
}

SymplecticMatrix SymplecticMatrix::inverse() const {
  // s⁻¹ = [[dᵀ, -bᵀ], [-cᵀ, aᵀ]] for symplectic s.
  const Eigen::Index m = dim();
  Mat inv(2 * m, 2 * m);
  inv << d().transpose(), -b().transpose(), -c().transpose(), a().transpose();
  return SymplecticMatrix(inv);
}

VVDVector::VVDVector(const Vec& components) : c_(components) {
  for (Eigen::Index k = 0; k < c_.size(); ++k) {
    if (!(c_(k) >= 0.0) || !std::isfinite(c_(k))) fail(ErrorKind::InvalidInput, "VVD component negative or non-finite");
    if (k > 0 && c_(k) > c_(k - 1)) fail(ErrorKind::InvalidInput, "VVD components not sorted descending");
  }
}

namespace fault {
namespace {
std::atomic<bool> g_cayley_flip{false};
}
void set_cayley_sign_flip(bool on) { g_cayley_flip.store(on); }
bool cayley_sign_flip() { return g_cayley_flip.load(); }
}  // namespace fault

SiegelDiskPoint cayley(const SiegelUpperPoint& x) {
  const CMat z = x.complex();
  const CMat id = identity_c(x.dim());
  const cplx i = fault::cayley_sign_flip() ? -kI : kI;
  return SiegelDiskPoint((z - i * id) * matfun::complex_inv(z + i * id));
}

SiegelUpperPoint inverse_cayley(const SiegelDiskPoint& w) {
  const CMat id = identity_c(w.dim());
  const CMat z = kI * (id + w.w()) * matfun::complex_inv(id - w.w());
  return SiegelUpperPoint::from_complex(z);
}

SymplecticMatrix canonical_rep(const SiegelUpperPoint& x) {
  const Eigen::Index m = x.dim();
  const Mat root = matfun::spd_fun(x.v_spd(), matfun::MatFn::Sqrt);
  const Mat inv_root = matfun::spd_fun(x.v_spd(), matfun::MatFn::InvSqrt);
  Mat g(2 * m, 2 * m);
  g << root, x.u() * inv_root, Mat::Zero(m, m), inv_root;
  return SymplecticMatrix(g);
}

SiegelUpperPoint symplectic_action(const SymplecticMatrix& s, const SiegelUpperPoint& x) {
  if (s.dim() != x.dim()) fail(ErrorKind::ShapeMismatch, "symplectic/point dimension mismatch");
  const CMat z = x.complex();
  const CMat num = s.a().cast<cplx>() * z + s.b().cast<cplx>();
  const CMat den = s.c().cast<cplx>() * z + s.d().cast<cplx>();
  return SiegelUpperPoint::from_complex(num * matfun::complex_inv(den));
}

CMat cross_ratio(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "cross_ratio dimension mismatch");
  const CMat zx = x.complex(), zy = y.complex();
  const CMat zxb = zx.conjugate(), zyb = zy.conjugate();
  return (zx - zy) * matfun::complex_inv(zx - zyb) * (zxb - zyb) * matfun::complex_inv(zxb - zy);
}

Vec cross_ratio_spectrum(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  const CMat r = cross_ratio(x, y);
  Eigen::ComplexEigenSolver<CMat> solver(r, false);
  if (solver.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "cross-ratio eigensolver failed");
  const CVec ev = solver.eigenvalues();
  Vec out(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (std::abs(ev(k).imag()) > 1e-8) {
      fail(ErrorKind::InvalidInput, "cross-ratio eigenvalue with imaginary part " + std::to_string(ev(k).imag()));
    }
    out(k) = ev(k).real();
  }
  std::sort(out.begin(), out.end());
  return out;
}

Vec cross_ratio_eigenvalues(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  if (x.dim() != y.dim()) fail(ErrorKind::ShapeMismatch, "dimension mismatch");
  // φ(x)⁻¹[y] = v^-½ (y - u) v^-½
  const Mat s = matfun::spd_fun(x.v_spd(), matfun::MatFn::InvSqrt);
  const Eigen::Index m = x.dim();
  const CMat id = identity_c(m);
  CMat yp(m, m);
  yp.real() = s * (y.u() - x.u()) * s;
  yp.imag() = s * y.v() * s;
  const CMat w = (yp - kI * id) * matfun::complex_inv(yp + kI * id);
  Vec r = matfun::herm_eig(w.adjoint() * w).values;
  for (Eigen::Index k = 0; k < r.size(); ++k) r(k) = std::max(r(k), 0.0);
  return r;
}

double vvd_component(double r) {
  if (r >= kMaxCrossRatio) {
    fail(ErrorKind::NumericalOverflow, "cross-ratio eigenvalue " + std::to_string(r) + " too close to 1");
  }
  return 2.0 * std::atanh(std::sqrt(std::max(r, 0.0)));
}

VVDVector vvd(const SiegelUpperPoint& x, const SiegelUpperPoint& y) {
  const Vec r = cross_ratio_eigenvalues(x, y);
  Vec c(r.size());
  // r ascending -> components descending.
  for (Eigen::Index k = 0; k < r.size(); ++k) c(k) = vvd_component(r(r.size() - 1 - k));
  return VVDVector(c);
}

double distance(const SiegelUpperPoint& x, const SiegelUpperPoint& y) { return vvd(x, y).norm(); }

SiegelUpperPoint sample_upper_point(Eigen::Index m, std::uint64_t seed) {
  if (m < 1) fail(ErrorKind::InvalidInput, "m must be >= 1");
  std::mt19937_64 rng(seed);
  const Mat u = random_symmetric(m, 1.0, rng);
  const Mat logv = random_symmetric(m, 0.5, rng);
  return SiegelUpperPoint(RealSymMatrix(u), matfun::sym_exp(RealSymMatrix(logv)));
}

SiegelDiskPoint sample_disk_point(Eigen::Index m, std::uint64_t seed) {
  return cayley(sample_upper_point(m, seed));
}

SymplecticMatrix sample_spo(Eigen::Index m, std::uint64_t seed) {
  if (m < 1) fail(ErrorKind::InvalidInput, "m must be >= 1");
  std::mt19937_64 rng(seed ^ 0x5350'4f00ULL);
  const CMat u = random_unitary(m, rng);
  const Mat a = u.real(), b = u.imag();
  Mat k(2 * m, 2 * m);
  k << a, b, -b, a;
  return SymplecticMatrix(k);
}

SymplecticMatrix sample_symplectic(Eigen::Index m, std::uint64_t seed) {
  return canonical_rep(sample_upper_point(m, seed)) * sample_spo(m, seed + 1);
}

}  // namespace siegelnet::siegel
