#pragma once

// Dense matrix-function kernel: eigendecompositions, SPD/HPD spectral
// functions and their Daleckii-Krein derivatives, Stiefel projection.

#include <complex>

#include <Eigen/Dense>

#include "siegelnet/error.hpp"

namespace siegelnet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

namespace matfun {

inline constexpr double kPdTol = 1e-12;
inline constexpr double kSymTol = 1e-12;
/// Relative eigenvalue gap below which divided differences use f'(λ).
inline constexpr double kCoincidenceTol = 1e-8;

class RealSymMatrix {
 public:
  RealSymMatrix() = default;
  explicit RealSymMatrix(const Mat& entries);

  const Mat& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Mat m_;
};

class SPDMatrix {
 public:
  SPDMatrix() = default;
  /// Symmetrizes, then rejects min eigenvalue <= kPdTol.
  explicit SPDMatrix(const Mat& entries);

  const Mat& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Mat m_;
};

class ComplexSymMatrix {
 public:
  ComplexSymMatrix() = default;
  explicit ComplexSymMatrix(const CMat& entries);

  const CMat& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMat m_;
};

class HPDMatrix {
 public:
  HPDMatrix() = default;
  explicit HPDMatrix(const CMat& entries);

  const CMat& mat() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  CMat m_;
};

class StiefelMatrix {
 public:
  StiefelMatrix() = default;
  /// Validates QᵀQ = I within 1e-10; requires rows > cols.
  explicit StiefelMatrix(const Mat& entries);

  const Mat& mat() const { return m_; }
  Eigen::Index rows() const { return m_.rows(); }
  Eigen::Index cols() const { return m_.cols(); }

 private:
  Mat m_;
};

enum class MatFn { Sqrt, InvSqrt, Log, Inv, Exp };

/// Scalar function and its derivative, applied on the spectrum.
struct SpectralFunction {
  double (*value)(double);
  double (*derivative)(double);
};

SpectralFunction spectral(MatFn f);

struct SymEig {
  Vec values;  // ascending
  Mat vectors;
};

struct HermEig {
  Vec values;  // ascending
  CMat vectors;
};

SymEig sym_eig(const Mat& s);
SymEig sym_eig(const RealSymMatrix& s);
HermEig herm_eig(const CMat& h);

/// f applied to eigenvalues, eigenvectors preserved.
Mat spd_fun(const SPDMatrix& p, MatFn f);
CMat spd_fun(const HPDMatrix& p, MatFn f);

/// Applies an arbitrary spectral function to a symmetric matrix without
/// a positivity check (caller guarantees the spectrum is in f's domain).
Mat sym_apply(const Mat& s, const SpectralFunction& f);

SPDMatrix sym_exp(const RealSymMatrix& s);

CMat complex_inv(const CMat& m);

/// Loewner matrix of divided differences f[λi, λj].
Mat loewner(const Vec& eigenvalues, const SpectralFunction& f);

/// Directional derivative of spd_fun(P, f) along a symmetric direction E.
Mat matfun_jvp(const SPDMatrix& p, MatFn f, const Mat& direction);
CMat matfun_jvp(const HPDMatrix& p, MatFn f, const CMat& direction);
Mat sym_apply_jvp(const Mat& s, const SpectralFunction& f, const Mat& direction);

/// Thin QR factor with positive diagonal R.
StiefelMatrix stiefel_qr(const Mat& m);

// Small helpers shared across modules.
inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }
inline CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }
bool all_finite(const Mat& a);
bool all_finite(const CMat& a);

}  // namespace matfun
}  // namespace siegelnet
