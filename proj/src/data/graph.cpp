#include "siegelnet/data/graph.hpp"

#include <cmath>
#include <random>

#include "siegelnet/diff/kernels.hpp"
#include "siegelnet/diff/params.hpp"
#include "siegelnet/diff/trainer.hpp"

namespace siegelnet::data {
namespace {

void check_distances(const Mat& d) {
  if (d.rows() != d.cols()) fail(ErrorKind::ShapeMismatch, "distance matrix must be square");
  if (d.rows() < 2) fail(ErrorKind::InvalidInput, "need at least 2 nodes");
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (i == j) continue;
      if (!std::isfinite(d(i, j)) || !(d(i, j) > 0.0)) {
        fail(ErrorKind::InvalidInput, "off-diagonal graph distances must be positive and finite");
      }
      if (std::abs(d(i, j) - d(j, i)) > 1e-12 * std::max(1.0, std::abs(d(i, j)))) {
        fail(ErrorKind::InvalidInput, "graph distance matrix must be symmetric");
      }
    }
  }
}

double pair_count(Eigen::Index n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

std::vector<siegel::SiegelUpperPoint> unpack(const Vec& raw, Eigen::Index m, Eigen::Index n) {
  const Eigen::Index bs = diff::raw_size(diff::BlockKind::SiegelPoint, m);
  std::vector<siegel::SiegelUpperPoint> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const diff::ParamBlock b{"node", diff::BlockKind::SiegelPoint, i * bs, bs, m, 0, {}};
    out.push_back(std::get<siegel::SiegelUpperPoint>(diff::materialize(b, raw)));
  }
  return out;
}

}  // namespace

Mat cosine_graph(const std::vector<Vec>& features) {
  const auto n = static_cast<Eigen::Index>(features.size());
  if (n == 0) fail(ErrorKind::InvalidInput, "no feature vectors");
  std::vector<Vec> unit;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec& f = features[static_cast<std::size_t>(i)];
    if (f.size() != features.front().size()) fail(ErrorKind::ShapeMismatch, "feature vectors differ in length");
    if (!f.allFinite()) fail(ErrorKind::InvalidInput, "non-finite feature value in row " + std::to_string(i));
    const double nrm = f.norm();
    if (nrm == 0.0) fail(ErrorKind::DegenerateInput, "zero feature vector in row " + std::to_string(i));
    unit.push_back(f / nrm);
  }
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = std::clamp(unit[static_cast<std::size_t>(i)].dot(unit[static_cast<std::size_t>(j)]), -1.0, 1.0);
      d(i, j) = d(j, i) = std::max(1.0 - c, kGraphDistanceFloor);
    }
  }
  return d;
}

void GraphEmbeddingConfig::validate() const {
  if (m < 1) fail(ErrorKind::ConfigError, "embedding m must be >= 1");
  if (epochs < 0) fail(ErrorKind::ConfigError, "epochs must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::ConfigError, "lr must be positive");
  if (!(lr_final_ratio > 0.0 && lr_final_ratio <= 1.0)) fail(ErrorKind::ConfigError, "lr_final_ratio must be in (0, 1]");
  if (!(init_spread >= 0.0) || !std::isfinite(init_spread)) fail(ErrorKind::ConfigError, "init_spread must be >= 0");
}

GraphEmbedding embed_graph(const Mat& distances, const GraphEmbeddingConfig& cfg) {
  cfg.validate();
  check_distances(distances);
  const Eigen::Index n = distances.rows();
  const Eigen::Index bs = diff::raw_size(diff::BlockKind::SiegelPoint, cfg.m);
  const double pairs = pair_count(n);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, cfg.init_spread);
  Vec raw(n * bs);
  for (Eigen::Index k = 0; k < raw.size(); ++k) raw(k) = gauss(rng);

  diff::TrainConfig tc;
  tc.lr = cfg.lr;
  diff::Adam adam(raw.size(), tc);
  const double decay = cfg.epochs > 1 ? std::pow(cfg.lr_final_ratio, 1.0 / (cfg.epochs - 1)) : 1.0;

  GraphEmbedding out;
  Vec best = raw;
  double best_loss = std::numeric_limits<double>::infinity();
  auto diverged = [](int epoch, const std::string& why) {
    fail(ErrorKind::DivergedTraining, "embedding diverged at epoch " + std::to_string(epoch) + ": " + why);
  };
  for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
    const bool last = epoch == cfg.epochs;
    diff::DistortionResult r;
    try {
      r = diff::distortion(raw, cfg.m, distances, !last);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ConfigError || e.kind() == ErrorKind::ShapeMismatch) throw;
      diverged(epoch, e.what());
    }
    if (!std::isfinite(r.loss) || (!last && !r.grad.allFinite())) diverged(epoch, "non-finite loss or gradient");
    out.trace.push_back(r.loss / pairs);
    if (r.loss < best_loss) {
      best_loss = r.loss;
      best = raw;
    }
    if (last) break;
    adam.step(raw, r.grad);
    tc.lr *= decay;
    adam.set_lr(tc.lr);
  }
  out.points = unpack(best, cfg.m, n);
  out.average_distortion = best_loss / pairs;
  return out;
}

double average_distortion(const std::vector<siegel::SiegelUpperPoint>& points, const Mat& distances) {
  check_distances(distances);
  if (static_cast<Eigen::Index>(points.size()) != distances.rows()) {
    fail(ErrorKind::ShapeMismatch, "point count does not match graph size");
  }
  const Eigen::Index n = distances.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = siegel::distance(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      const double g = distances(i, j);
      sum += std::abs(d * d / (g * g) - 1.0);
    }
  }
  return sum / pair_count(n);
}

}  // namespace siegelnet::data
