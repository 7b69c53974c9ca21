#pragma once

// Differentiable counterparts of the siegel / spd / gyro / layers forward
// operations, recorded on a Tape. Values agree with the plain library
// functions; tests hold the two paths against each other.

#include <variant>
#include <vector>

#include "siegelnet/diff/ops.hpp"
#include "siegelnet/gyro.hpp"

namespace siegelnet::diff {

/// u + iv on a tape (u symmetric, v SPD by construction of the caller).
struct TSiegel {
  Var u;
  Var v;
  Eigen::Index dim() const { return u.rows(); }
};

struct TSpd {
  Var p;
  Eigen::Index dim() const { return p.rows(); }
};

using TFactor = std::variant<TSpd, TSiegel>;
using TProduct = std::vector<TFactor>;

TSiegel constant(Tape& t, const siegel::SiegelUpperPoint& x);
TSpd constant(Tape& t, const spd::SPDPoint& p);
TProduct constant(Tape& t, const gyro::ProductPoint& x);
TSiegel variable(Tape& t, const siegel::SiegelUpperPoint& x);

siegel::SiegelUpperPoint value(const TSiegel& x);
spd::SPDPoint value(const TSpd& x);

CVar as_complex(const TSiegel& x);
/// Splits a complex node into a Siegel point (parts symmetrized).
TSiegel from_complex(const CVar& z);

// siegel
CVar cayley(const TSiegel& x);
TSiegel inverse_cayley(const CVar& w);
Var canonical_rep(const TSiegel& x);
TSiegel symplectic_action(Var s, const TSiegel& x);
CVar cross_ratio(const TSiegel& x, const TSiegel& y);
/// φ(x)⁻¹[y] from the base point's v^-½ (lets callers reuse it).
TSiegel translate_to_origin(Var base_inv_sqrt, Var base_u, const TSiegel& y);
/// Realified wᴴw-type Hermitian matrix whose eigenvalues are the
/// cross-ratio eigenvalues of (origin, y), each doubled.
Var cross_ratio_hermitian(const TSiegel& y_at_origin);
Var distance_sq(const TSiegel& x, const TSiegel& y);
Var distance(const TSiegel& x, const TSiegel& y);
/// Descending column of vector-valued distance components.
Var vvd(const TSiegel& x, const TSiegel& y);
Var vvd_from_origin(const TSiegel& y_at_origin);
Var distance_sq_from_origin(const TSiegel& y_at_origin);

// spd
Var spd_distance(const TSpd& p, const TSpd& q);
Var spd_canonical_rep(const TSpd& p);

// gyro
/// log(g gᵀ) via the closed form g gᵀ = [[v + u v⁻¹ u, u v⁻¹], [v⁻¹ u, v⁻¹]].
Var log_gram(const TSiegel& x);
Var log_gram(const TSpd& p);
TSiegel oplus(const TSiegel& x, const TSiegel& y);
TSpd oplus(const TSpd& x, const TSpd& y);
TSiegel ominus(const TSiegel& x);
TSpd ominus(const TSpd& x);
Var inner_S(const TSiegel& x, const TSiegel& y);
Var inner_S(const TSpd& x, const TSpd& y);
Var inner_S(const TProduct& x, const TProduct& y);
Var norm_S(const TSiegel& x);

// layers
struct TQHyperplane {
  TSiegel a;
  TSiegel p;
};
struct TProductQHyperplane {
  TProduct a;
  TProduct p;
};
struct TVHyperplane {
  TSiegel p;
  Var a_xi;   // m x 1 chamber direction
  Var scale;  // 1 x 1
};

/// ⟨log(φ(p)⁻¹φ(x)φ(x)ᵀφ(p)⁻ᵀ), L⟩ with L = log(φ(a)φ(a)ᵀ) supplied and the
/// translation given by p's v^-½ and u.
Var q_logit_prepared(const TSiegel& x, Var p_inv_sqrt, Var p_u, Var log_gram_a);
/// SPD factor analog: ⟨log(p^-½ x p^-½), log a⟩.
Var q_logit_prepared(const TSpd& x, Var p_inv_sqrt, Var log_a);

Var q_logit(const TSiegel& x, const TQHyperplane& h);
Var q_distance(const TSiegel& x, const TQHyperplane& h);
Var q_product_logit(const TProduct& x, const TProductQHyperplane& h);
Var q_product_distance(const TProduct& x, const TProductQHyperplane& h);
Var v_logit(const TSiegel& x, const TVHyperplane& h);

/// Def.-8 layer from precomputed b^½.
TSiegel afc_prepared(const TSiegel& x, Var b_sqrt, Var a);
TSiegel afc_forward(const TSiegel& x, Var a, Var b);
TSiegel dfc_forward(const TSiegel& x, Var a, Var b);
/// SPD restrictions: b^½ p b^½ and bᵀ p b.
TSpd spd_translate(const TSpd& p, Var b_sqrt);
TSpd spd_bimap(const TSpd& p, Var b);

}  // namespace siegelnet::diff
