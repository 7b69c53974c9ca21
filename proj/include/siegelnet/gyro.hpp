#pragma once

// Coset-level binary/inverse operations and the log-Gram inner product on
// Siegel and SPD spaces, plus their factorwise product-space extensions.

#include <string>
#include <variant>
#include <vector>

#include "siegelnet/siegel.hpp"
#include "siegelnet/spd.hpp"

namespace siegelnet::gyro {

using siegel::SiegelUpperPoint;
using spd::SPDPoint;

enum class FactorKind { Spd, Siegel };

struct FactorSpec {
  FactorKind kind;
  Eigen::Index dim;
  bool operator==(const FactorSpec&) const = default;
};

using Signature = std::vector<FactorSpec>;
using Factor = std::variant<SPDPoint, SiegelUpperPoint>;

std::string to_string(const Signature& sig);

class ProductPoint {
 public:
  ProductPoint() = default;
  explicit ProductPoint(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  Signature signature() const;
  static ProductPoint origin(const Signature& sig);

 private:
  std::vector<Factor> factors_;
};

FactorSpec spec_of(const Factor& f);

/// log(g gᵀ) with g the canonical representative: 2m x 2m for Siegel
/// points (computed on g gᵀ, never on g), m x m for SPD points.
Mat log_gram(const SiegelUpperPoint& x);
Mat log_gram(const SPDPoint& p);

SiegelUpperPoint oplus(const SiegelUpperPoint& x, const SiegelUpperPoint& y);
SPDPoint oplus(const SPDPoint& x, const SPDPoint& y);
ProductPoint oplus(const ProductPoint& x, const ProductPoint& y);

SiegelUpperPoint ominus(const SiegelUpperPoint& x);
SPDPoint ominus(const SPDPoint& x);
ProductPoint ominus(const ProductPoint& x);

double inner_S(const SiegelUpperPoint& x, const SiegelUpperPoint& y);
double inner_S(const SPDPoint& x, const SPDPoint& y);
double inner_S(const ProductPoint& x, const ProductPoint& y);

double norm_S(const SiegelUpperPoint& x);
double norm_S(const SPDPoint& x);
double norm_S(const ProductPoint& x);

}  // namespace siegelnet::gyro
