#include "siegelnet/diff/tape.hpp"

namespace siegelnet::diff {

const Mat& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1) fail(ErrorKind::ShapeMismatch, "expected a 1x1 node");
  return v(0, 0);
}

Var Tape::constant(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, false});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::variable(Mat value) {
  nodes_.push_back(Node{std::move(value), Mat(), nullptr, true});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Mat value, const std::vector<Var>& parents, Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape != this) fail(ErrorKind::InvalidInput, "operand belongs to another tape");
    needs = needs || requires_grad(p);
  }
  nodes_.push_back(Node{std::move(value), Mat(), needs ? std::move(backward) : nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols()) {
    fail(ErrorKind::ShapeMismatch, "gradient shape does not match node " + std::to_string(id));
  }
  if (n.grad.size() == 0) n.grad = g;
  else n.grad += g;
}

void Tape::accumulate(Var v, const Mat& g) { accumulate(v.id, g); }

void Tape::backward(Var loss) {
  if (loss.rows() != 1 || loss.cols() != 1) fail(ErrorKind::ShapeMismatch, "loss must be 1x1");
  backward({{loss, Mat::Ones(1, 1)}});
}

void Tape::backward(const std::vector<std::pair<Var, Mat>>& seeds) {
  for (auto& n : nodes_) n.grad.resize(0, 0);
  for (const auto& [v, g] : seeds) accumulate(v, g);
  propagate();
}

void Tape::propagate() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    // Copy: the callback may not alias the node's own storage.
    const Mat g = n.grad;
    n.backward(*this, g);
  }
}

}  // namespace siegelnet::diff
