#pragma once

// Unconstrained parameterizations of constrained parameters. A model's
// parameters live in one flat raw vector; each ParamBlock owns a slice.

#include <string>
#include <variant>
#include <vector>

#include "siegelnet/diff/geometry.hpp"
#include "siegelnet/layers.hpp"

namespace siegelnet::diff {

enum class BlockKind { Sym, Spd, Stiefel, Chamber, SiegelPoint, ProductPoint, Scalar };

std::string to_string(BlockKind k);

struct ParamBlock {
  std::string name;
  BlockKind kind = BlockKind::Scalar;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
  Eigen::Index rows = 0;  // m (Stiefel: input dim)
  Eigen::Index cols = 0;  // Stiefel output dim
  gyro::Signature signature;  // ProductPoint only
};

/// Raw length needed for a block of the given kind and shape.
Eigen::Index raw_size(BlockKind kind, Eigen::Index rows, Eigen::Index cols = 0, const gyro::Signature& sig = {});

class ParamLayout {
 public:
  /// Appends a block and returns its index.
  std::size_t add(std::string name, BlockKind kind, Eigen::Index rows, Eigen::Index cols = 0,
                  gyro::Signature signature = {});

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_.at(i); }
  Eigen::Index size() const { return size_; }

 private:
  std::vector<ParamBlock> blocks_;
  Eigen::Index size_ = 0;
};

using Constrained = std::variant<matfun::RealSymMatrix, matfun::SPDMatrix, matfun::StiefelMatrix,
                                 layers::ChamberDirection, siegel::SiegelUpperPoint, gyro::ProductPoint, double>;

/// Plain evaluation of a block from the full raw vector.
Constrained materialize(const ParamBlock& block, const Vec& raw);

using TConstrained = std::variant<Var, TSiegel, TProduct>;

/// Tape evaluation; `raw` is the whole parameter vector as a column node.
TConstrained materialize(const ParamBlock& block, Var raw);

/// Raw values that materialize to the given object (inverse parameterization
/// where one exists: sym/spd/siegel_point/product_point/scalar/stiefel).
Vec raw_from_sym(const Mat& s);
Vec raw_from_spd(const Mat& p);
Vec raw_from_siegel(const siegel::SiegelUpperPoint& x);
Vec raw_from_stiefel(const Mat& q);

/// Column slice of a column node.
Var slice(Var raw, Eigen::Index offset, Eigen::Index size);

}  // namespace siegelnet::diff
