#pragma once

#include "siegelnet/diff/tape.hpp"

namespace siegelnet::diff {

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var operator*(double s, Var a);
/// Matrix product.
Var operator*(Var a, Var b);

Var transpose(Var a);
Var inverse(Var a);
/// (A + Aᵀ) / 2
Var symmetrize(Var a);
/// Adds c·I to a square matrix.
Var add_identity(Var a, double c);

/// f(sym(A)) through the eigendecomposition; backward is Daleckii-Krein.
Var sym_fun(Var a, const matfun::SpectralFunction& f);
Var sym_fun(Var a, matfun::MatFn f);
/// Ascending eigenvalues of sym(A) as a column vector.
Var sym_eigvals(Var a);

Var trace(Var a);
/// Frobenius inner product ⟨A, B⟩, 1x1.
Var dot(Var a, Var b);
Var sum(Var a);
/// Elementwise scalar functions.
Var elementwise(Var a, double (*f)(double), double (*df)(double));
Var sqrt(Var a);
Var abs(Var a);
/// Multiplies every entry of a by the 1x1 node s.
Var scale(Var a, Var s);

/// [[a, b], [c, d]]; blocks must be conformant.
Var assemble(Var a, Var b, Var c, Var d);
Var block(Var a, Eigen::Index row, Eigen::Index col, Eigen::Index rows, Eigen::Index cols);
/// Stacks 1x1 nodes into a column vector.
Var stack_scalars(const std::vector<Var>& items);

/// Symmetric m x m matrix from an m(m+1)/2 column (upper triangle, row major).
Var sym_from_vec(Var v, Eigen::Index m);
/// Thin QR factor with positive diagonal R.
Var qr_q(Var a);
/// sort(|raw|) descending, normalized to unit norm; zero input gives e₁.
Var chamber_normalize(Var raw);

/// Mean-free softmax cross-entropy of a logit column against a class index.
Var softmax_xent(Var logits, Eigen::Index label);

/// Complex matrix as a (re, im) pair of real nodes.
struct CVar {
  Var re;
  Var im;
};

CVar operator+(const CVar& a, const CVar& b);
CVar operator-(const CVar& a, const CVar& b);
CVar operator*(const CVar& a, const CVar& b);
CVar conj(const CVar& a);
/// Inverse through the real embedding [[re, -im], [im, re]].
CVar inverse(const CVar& a);
/// a ± c·iI
CVar add_i_identity(const CVar& a, double c);
/// Realified matrix [[re, -im], [im, re]].
Var realify(const CVar& a);

}  // namespace siegelnet::diff
