#pragma once

// Network building blocks on Siegel spaces: quotient-structure MLR heads
// (single and product space), vector-valued-distance MLR heads, and the
// group-action (AFC) and Stiefel-compression (DFC) fully-connected layers.

#include <variant>
#include <vector>

#include "siegelnet/gyro.hpp"

namespace siegelnet::layers {

using gyro::ProductPoint;
using siegel::SiegelUpperPoint;

/// Denominator norms below this make a hyperplane degenerate.
inline constexpr double kDegenerateTol = 1e-10;

struct QHyperplane {
  SiegelUpperPoint a;
  SiegelUpperPoint p;
};

struct ProductQHyperplane {
  ProductPoint a;
  ProductPoint p;
};

/// Unit vector in the closed Weyl chamber (descending, nonnegative).
class ChamberDirection {
 public:
  ChamberDirection() = default;
  explicit ChamberDirection(const Vec& direction);

  const Vec& direction() const { return d_; }
  Eigen::Index dim() const { return d_.size(); }

 private:
  Vec d_;
};

/// ξ is represented only through a_ξ; the K-element of the ray is absorbed.
struct VHyperplane {
  SiegelUpperPoint p;
  ChamberDirection a_xi;
  double scale = 1.0;
};

struct AFCParams {
  matfun::RealSymMatrix a;
  matfun::SPDMatrix b;
};

struct DFCParams {
  matfun::RealSymMatrix a;   // m2 x m2
  matfun::StiefelMatrix b;   // m x m2
};

double q_logit(const SiegelUpperPoint& x, const QHyperplane& h);
double q_distance(const SiegelUpperPoint& x, const QHyperplane& h);
double q_product_logit(const ProductPoint& x, const ProductQHyperplane& h);
double q_product_distance(const ProductPoint& x, const ProductQHyperplane& h);

/// ‖log(φ(a)φ(a)ᵀ)‖ (root of the summed squares for products).
double q_denominator(const QHyperplane& h);
double q_denominator(const ProductQHyperplane& h);

/// Upper bound ⟨vvd(x, p), a_ξ⟩ on the signed distance, without the learnable scale.
double v_bound(const SiegelUpperPoint& x, const VHyperplane& h);
double v_logit(const SiegelUpperPoint& x, const VHyperplane& h);

SiegelUpperPoint afc_forward(const SiegelUpperPoint& x, const AFCParams& theta);
SiegelUpperPoint dfc_forward(const SiegelUpperPoint& x, const DFCParams& theta);

using Head = std::variant<QHyperplane, ProductQHyperplane, VHyperplane>;
using LayerInput = std::variant<SiegelUpperPoint, ProductPoint>;

/// Per-class logits; softmax of these is the class posterior.
Vec mlr_logits(const LayerInput& x, const std::vector<Head>& heads);

Vec softmax(const Vec& logits);

}  // namespace siegelnet::layers
