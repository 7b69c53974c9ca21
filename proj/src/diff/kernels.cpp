#include "siegelnet/diff/kernels.hpp"

#include <array>
#include <cmath>
#include <exception>

namespace siegelnet::diff {
namespace {

/// Runs body(i) for i in [0, n) in parallel and rethrows the exception of the
/// lowest failing index, so error reporting does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int argmax(const Mat& column) {
  Eigen::Index k = 0;
  column.col(0).maxCoeff(&k);
  return static_cast<int>(k);
}

Eigen::Index block_size(Eigen::Index m) { return m * (m + 1); }

struct PairEval {
  double term = 0.0;
  std::array<Mat, 4> grad;  // d term / d (s_i, u_i, u_j, v_j)
};

/// Closed-form |d²(x_i, x_j) / dg² - 1| with s = v_i^{-1/2}. The distance is
/// Σ h(eig(W Wᴴ)) with W the Cayley image of the translated point, so
/// d(d²)/dH = h'(H) and no divided differences are needed.
PairEval pair_eval(const Mat& s, const Mat& ui, const Mat& uj, const Mat& vj, double dg, bool with_grad) {
  const Eigen::Index m = s.rows();
  const Mat d = uj - ui;
  const CMat z = (s * d * s).cast<cplx>() + cplx(0, 1) * (s * vj * s).cast<cplx>();
  const CMat id = CMat::Identity(m, m);
  const CMat k = (z + cplx(0, 1) * id).partialPivLu().inverse();
  const CMat w = id - cplx(0, 2) * k;
  const Eigen::SelfAdjointEigenSolver<CMat> es(matfun::hermitize(w * w.adjoint()));
  const Vec r = es.eigenvalues().cwiseMax(0.0);
  if (r.maxCoeff() >= siegel::kMaxCrossRatio) {
    fail(ErrorKind::NumericalOverflow, "cross-ratio eigenvalue " + std::to_string(r.maxCoeff()) + " too close to 1");
  }
  double d2 = 0.0;
  Vec dh(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const double x = std::sqrt(r(a));
    const double at = std::atanh(x);
    d2 += 4.0 * at * at;
    // h'(r) = 4 atanh(√r) / (√r (1 - r)), → 4 as r → 0
    const double ratio = x < 1e-6 ? 1.0 + r(a) / 3.0 : at / x;
    dh(a) = 4.0 * ratio / (1.0 - r(a));
  }
  const double inv_g2 = 1.0 / (dg * dg);
  const double e = d2 * inv_g2 - 1.0;
  PairEval out;
  out.term = std::abs(e);
  if (!with_grad) return out;

  const double scale = (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)) * inv_g2;
  const CMat gh = es.eigenvectors() * dh.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  // dL = Re tr(A dZ) with A = 2i K (2 Wᴴ G_H) K
  const CMat a = cplx(0, 4) * k * w.adjoint() * gh * k;
  const Mat gu = scale * a.real().transpose();
  const Mat gv = -scale * a.imag().transpose();
  out.grad[0] = gu * s * d + d * s * gu + gv * s * vj + vj * s * gv;
  out.grad[1] = -(s * gu * s);
  out.grad[2] = s * gu * s;
  out.grad[3] = s * gv * s;
  return out;
}

TSiegel node_point(Var raw, Eigen::Index m, Eigen::Index node) {
  ParamBlock b{"node", BlockKind::SiegelPoint, node * block_size(m), block_size(m), m, 0, {}};
  return std::get<TSiegel>(materialize(b, raw));
}

Var pair_term(const TSiegel& xi, Var si, const TSiegel& xj, double dg) {
  Tape& t = *si.tape;
  const Var d2 = distance_sq_from_origin(translate_to_origin(si, xi.u, xj));
  return abs((1.0 / (dg * dg)) * d2 - t.constant(Mat::Ones(1, 1)));
}

void check_graph(const Vec& raw, Eigen::Index m, const Mat& g) {
  if (g.rows() != g.cols()) fail(ErrorKind::ShapeMismatch, "graph distance matrix must be square");
  if (raw.size() != g.rows() * block_size(m)) fail(ErrorKind::ShapeMismatch, "embedding raw size mismatch");
}

}  // namespace

BatchResult batch_gradient(const Model& model, const Vec& raw, const std::vector<Sample>& data,
                           const std::vector<std::size_t>& indices) {
  if (indices.empty()) fail(ErrorKind::InvalidInput, "empty batch");
  Tape pt;
  const Var r = pt.variable(raw);
  const std::vector<Var> prep = model.prepare(pt, r);

  const std::size_t n = indices.size();
  std::vector<std::vector<Mat>> grads(n);
  std::vector<double> losses(n);
  std::vector<int> hits(n);
  parallel_for(n, [&](std::size_t i) {
    const Sample& s = data.at(indices[i]);
    Tape t;
    std::vector<Var> leaves;
    leaves.reserve(prep.size());
    for (const Var& p : prep) leaves.push_back(t.variable(p.value()));
    const Var lg = model.logits(t, leaves, constant(t, s.x));
    const Var loss = softmax_xent(lg, s.label);
    t.backward(loss);
    losses[i] = loss.scalar();
    hits[i] = argmax(lg.value()) == s.label ? 1 : 0;
    grads[i].reserve(leaves.size());
    for (const Var& l : leaves) grads[i].push_back(t.grad(l));
  });

  BatchResult out;
  std::vector<Mat> total = grads[0];
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += grads[i][k];
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.loss += losses[i];
    out.correct += hits[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  std::vector<std::pair<Var, Mat>> seeds;
  seeds.reserve(prep.size());
  for (std::size_t k = 0; k < prep.size(); ++k) seeds.emplace_back(prep[k], inv_n * total[k]);
  pt.backward(seeds);
  out.grad = pt.grad(r).col(0);
  return out;
}

BatchResult batch_gradient_reference(const Model& model, const Vec& raw, const std::vector<Sample>& data,
                                     const std::vector<std::size_t>& indices) {
  if (indices.empty()) fail(ErrorKind::InvalidInput, "empty batch");
  Tape t;
  const Var r = t.variable(raw);
  const std::vector<Var> prep = model.prepare(t, r);
  BatchResult out;
  Var total;
  for (std::size_t idx : indices) {
    const Sample& s = data.at(idx);
    const Var lg = model.logits(t, prep, constant(t, s.x));
    const Var loss = softmax_xent(lg, s.label);
    if (argmax(lg.value()) == s.label) ++out.correct;
    total = total.valid() ? total + loss : loss;
  }
  const Var mean = (1.0 / static_cast<double>(indices.size())) * total;
  t.backward(mean);
  out.loss = mean.scalar();
  out.grad = t.grad(r).col(0);
  return out;
}

std::vector<int> predict_all(const Model& model, const Vec& raw, const std::vector<Sample>& data) {
  Tape pt;
  const std::vector<Var> prep = model.prepare(pt, pt.constant(raw));
  std::vector<int> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    Tape t;
    std::vector<Var> leaves;
    for (const Var& p : prep) leaves.push_back(t.constant(p.value()));
    out[i] = argmax(model.logits(t, leaves, constant(t, data[i].x)).value());
  });
  return out;
}

double accuracy(const Model& model, const Vec& raw, const std::vector<Sample>& data) {
  if (data.empty()) return 0.0;
  const auto pred = predict_all(model, raw, data);
  int hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += pred[i] == data[i].label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double product_distance(const gyro::ProductPoint& x, const gyro::ProductPoint& y) {
  if (x.signature() != y.signature()) fail(ErrorKind::ShapeMismatch, "product_distance signature mismatch");
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double d = 0.0;
    if (const auto* s = std::get_if<siegel::SiegelUpperPoint>(&x.factors()[j])) {
      d = siegel::distance(*s, std::get<siegel::SiegelUpperPoint>(y.factors()[j]));
    } else {
      d = spd::spd_distance(std::get<spd::SPDPoint>(x.factors()[j]), std::get<spd::SPDPoint>(y.factors()[j]));
    }
    sq += d * d;
  }
  return std::sqrt(sq);
}

Mat cross_distances(const std::vector<gyro::ProductPoint>& queries, const std::vector<gyro::ProductPoint>& refs) {
  Mat out(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(refs.size()));
  parallel_for(queries.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < refs.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = product_distance(queries[i], refs[j]);
    }
  });
  return out;
}

Mat cross_distances_reference(const std::vector<gyro::ProductPoint>& queries,
                              const std::vector<gyro::ProductPoint>& refs) {
  Mat out(static_cast<Eigen::Index>(queries.size()), static_cast<Eigen::Index>(refs.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < refs.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = product_distance(queries[i], refs[j]);
    }
  }
  return out;
}

DistortionResult distortion(const Vec& raw, Eigen::Index m, const Mat& g, bool with_grad) {
  check_graph(raw, m, g);
  const Eigen::Index n = g.rows();
  Tape pt;
  const Var r = with_grad ? pt.variable(raw) : pt.constant(raw);
  std::vector<TSiegel> pts;
  std::vector<Var> inv_sqrt;
  for (Eigen::Index i = 0; i < n; ++i) {
    pts.push_back(node_point(r, m, i));
    inv_sqrt.push_back(sym_fun(pts.back().v, matfun::MatFn::InvSqrt));
  }

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  // Per pair: loss, then gradients w.r.t. (s_i, u_i, u_j, v_j).
  std::vector<double> losses(pairs.size());
  std::vector<std::array<Mat, 4>> grads(with_grad ? pairs.size() : 0);
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto ui = static_cast<std::size_t>(pairs[k].first), uj = static_cast<std::size_t>(pairs[k].second);
    PairEval pe = pair_eval(inv_sqrt[ui].value(), pts[ui].u.value(), pts[uj].u.value(), pts[uj].v.value(),
                            g(pairs[k].first, pairs[k].second), with_grad);
    losses[k] = pe.term;
    if (with_grad) grads[k] = std::move(pe.grad);
  });

  DistortionResult out;
  for (double l : losses) out.loss += l;
  if (!with_grad) return out;

  std::vector<Mat> gs(static_cast<std::size_t>(n), Mat::Zero(m, m));
  std::vector<Mat> gu = gs, gv = gs;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto i = static_cast<std::size_t>(pairs[k].first), j = static_cast<std::size_t>(pairs[k].second);
    gs[i] += grads[k][0];
    gu[i] += grads[k][1];
    gu[j] += grads[k][2];
    gv[j] += grads[k][3];
  }
  std::vector<std::pair<Var, Mat>> seeds;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    seeds.emplace_back(inv_sqrt[i], gs[i]);
    seeds.emplace_back(pts[i].u, gu[i]);
    seeds.emplace_back(pts[i].v, gv[i]);
  }
  pt.backward(seeds);
  out.grad = pt.grad(r).col(0);
  return out;
}

DistortionResult distortion_reference(const Vec& raw, Eigen::Index m, const Mat& g) {
  check_graph(raw, m, g);
  const Eigen::Index n = g.rows();
  Tape t;
  const Var r = t.variable(raw);
  std::vector<TSiegel> pts;
  for (Eigen::Index i = 0; i < n; ++i) pts.push_back(node_point(r, m, i));
  Var total;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Var s = sym_fun(pts[static_cast<std::size_t>(i)].v, matfun::MatFn::InvSqrt);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Var term = pair_term(pts[static_cast<std::size_t>(i)], s, pts[static_cast<std::size_t>(j)], g(i, j));
      total = total.valid() ? total + term : term;
    }
  }
  DistortionResult out;
  if (!total.valid()) {
    out.grad = Vec::Zero(raw.size());
    return out;
  }
  t.backward(total);
  out.loss = total.scalar();
  out.grad = t.grad(r).col(0);
  return out;
}

}  // namespace siegelnet::diff
