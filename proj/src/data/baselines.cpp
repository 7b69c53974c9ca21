#include "siegelnet/data/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "siegelnet/diff/kernels.hpp"

namespace siegelnet::data {
namespace {

void append_sym(std::vector<double>& out, const Mat& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    out.push_back(s(i, i));
    for (Eigen::Index j = i + 1; j < s.cols(); ++j) out.push_back(std::sqrt(2.0) * s(i, j));
  }
}

Mat softmax_rows(const Mat& logits) {
  Mat p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double top = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - top).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

std::vector<int> knn_predict(const std::vector<gyro::ProductPoint>& train, const std::vector<int>& train_labels,
                             const std::vector<gyro::ProductPoint>& queries, int k, int classes) {
  if (train.empty()) fail(ErrorKind::InvalidInput, "kNN needs training points");
  if (train.size() != train_labels.size()) fail(ErrorKind::ShapeMismatch, "points and labels differ in count");
  if (k < 1 || static_cast<std::size_t>(k) > train.size()) fail(ErrorKind::ConfigError, "k must be in [1, #train]");
  if (classes < 1) fail(ErrorKind::ConfigError, "classes must be positive");
  const Mat d = diff::cross_distances(queries, train);
  std::vector<int> out;
  std::vector<std::size_t> order(train.size());
  for (Eigen::Index q = 0; q < d.rows(); ++q) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
      const double da = d(q, static_cast<Eigen::Index>(a)), db = d(q, static_cast<Eigen::Index>(b));
      return da < db || (da == db && a < b);
    });
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    std::vector<double> dist(static_cast<std::size_t>(classes), 0.0);
    for (int r = 0; r < k; ++r) {
      const int lab = train_labels[order[static_cast<std::size_t>(r)]];
      if (lab < 0 || lab >= classes) fail(ErrorKind::InvalidInput, "label out of range");
      ++votes[static_cast<std::size_t>(lab)];
      dist[static_cast<std::size_t>(lab)] += d(q, static_cast<Eigen::Index>(order[static_cast<std::size_t>(r)]));
    }
    int best = 0;
    for (int c = 1; c < classes; ++c) {
      const auto uc = static_cast<std::size_t>(c), ub = static_cast<std::size_t>(best);
      if (votes[uc] > votes[ub] || (votes[uc] == votes[ub] && dist[uc] < dist[ub])) best = c;
    }
    out.push_back(best);
  }
  return out;
}

Vec log_features(const gyro::ProductPoint& x) {
  std::vector<double> f;
  for (const auto& factor : x.factors()) {
    if (const auto* p = std::get_if<gyro::SPDPoint>(&factor)) {
      append_sym(f, matfun::spd_fun(p->p, matfun::MatFn::Log));
    } else {
      const auto& z = std::get<siegel::SiegelUpperPoint>(factor);
      append_sym(f, z.u());
      append_sym(f, matfun::spd_fun(z.v_spd(), matfun::MatFn::Log));
    }
  }
  return Eigen::Map<const Vec>(f.data(), static_cast<Eigen::Index>(f.size()));
}

void LogFeatConfig::validate() const {
  if (epochs < 1) fail(ErrorKind::ConfigError, "epochs must be >= 1");
  if (!(lr > 0.0)) fail(ErrorKind::ConfigError, "lr must be positive");
  if (!(l2 >= 0.0)) fail(ErrorKind::ConfigError, "l2 must be >= 0");
}

Mat LogFeatMlr::features(const std::vector<gyro::ProductPoint>& x) const {
  Mat f(static_cast<Eigen::Index>(x.size()), mean_.size() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vec v = log_features(x[i]);
    if (v.size() != mean_.size()) fail(ErrorKind::ShapeMismatch, "input signature differs from the fitted one");
    const auto r = static_cast<Eigen::Index>(i);
    f.row(r).head(mean_.size()) = ((v - mean_).array() / scale_.array()).matrix().transpose();
    f(r, mean_.size()) = 1.0;
  }
  return f;
}

void LogFeatMlr::fit(const std::vector<gyro::ProductPoint>& x, const std::vector<int>& labels, int classes,
                     const LogFeatConfig& cfg) {
  cfg.validate();
  if (x.empty() || x.size() != labels.size()) fail(ErrorKind::ShapeMismatch, "need matching non-empty points and labels");
  if (classes < 2) fail(ErrorKind::ConfigError, "need at least 2 classes");

  const Vec first = log_features(x.front());
  Mat raw(static_cast<Eigen::Index>(x.size()), first.size());
  for (std::size_t i = 0; i < x.size(); ++i) raw.row(static_cast<Eigen::Index>(i)) = log_features(x[i]).transpose();
  mean_ = raw.colwise().mean().transpose();
  scale_ = ((raw.rowwise() - mean_.transpose()).array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index k = 0; k < scale_.size(); ++k) {
    if (!(scale_(k) > 1e-12)) scale_(k) = 1.0;
  }
  const Mat f = features(x);

  const auto n = static_cast<double>(x.size());
  Mat y = Mat::Zero(f.rows(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) fail(ErrorKind::InvalidInput, "label out of range");
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  w_ = Mat::Zero(f.cols(), classes);
  Mat m1 = Mat::Zero(w_.rows(), w_.cols()), m2 = m1;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int t = 1; t <= cfg.epochs; ++t) {
    Mat g = f.transpose() * (softmax_rows(f * w_) - y) / n;
    g.topRows(g.rows() - 1) += cfg.l2 * w_.topRows(w_.rows() - 1);
    m1 = b1 * m1 + (1 - b1) * g;
    m2 = b2 * m2 + (1 - b2) * g.cwiseProduct(g);
    const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
    w_.array() -= cfg.lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
  }
  if (!w_.allFinite()) fail(ErrorKind::DivergedTraining, "log-feature regression diverged");
}

std::vector<int> LogFeatMlr::predict(const std::vector<gyro::ProductPoint>& x) const {
  if (w_.size() == 0) fail(ErrorKind::InvalidInput, "model is not fitted");
  const Mat logits = features(x) * w_;
  std::vector<int> out;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index k = 0;
    logits.row(i).maxCoeff(&k);
    out.push_back(static_cast<int>(k));
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) fail(ErrorKind::ShapeMismatch, "prediction count mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace siegelnet::data
