#pragma once

// Matrix-valued reverse-mode tape. Every node holds a dense real matrix;
// scalars are 1x1. Complex quantities are carried as (re, im) pairs by the
// geometry layer on top of this.

#include <functional>
#include <utility>
#include <vector>

#include "siegelnet/matfun.hpp"

namespace siegelnet::diff {

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat&)>;

  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Mat value);
  Var variable(Mat value);
  /// Records an op result. `backward` receives the output gradient and must
  /// call accumulate() on its parents; it is dropped if no parent needs grad.
  Var record(Mat value, const std::vector<Var>& parents, Backward backward);

  const Mat& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  /// Zero matrix of the right shape if nothing flowed into v.
  Mat grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  void accumulate(Var v, const Mat& g);
  void accumulate(int id, const Mat& g);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 node and propagates.
  void backward(Var loss);
  /// Propagates from arbitrary seed gradients (used to chain tapes).
  void backward(const std::vector<std::pair<Var, Mat>>& seeds);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    Backward backward;
    bool requires_grad = false;
  };

  void propagate();

  std::vector<Node> nodes_;
};

}  // namespace siegelnet::diff
