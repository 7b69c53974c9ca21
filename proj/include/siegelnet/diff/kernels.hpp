#pragma once

// Data-parallel hot loops. Each parallel kernel has a serial reference that
// computes the same quantity on one tape / one plain loop; tests and the
// benchmark compare the two.

#include <vector>

#include "siegelnet/diff/model.hpp"

namespace siegelnet::diff {

struct BatchResult {
  double loss = 0.0;  // mean cross-entropy
  Vec grad;           // d loss / d raw
  int correct = 0;
};

/// Per-sample tapes in parallel on top of one parameter tape; per-sample
/// gradients are reduced in index order.
BatchResult batch_gradient(const Model& model, const Vec& raw, const std::vector<Sample>& data,
                           const std::vector<std::size_t>& indices);
/// Whole batch on a single tape, no threading.
BatchResult batch_gradient_reference(const Model& model, const Vec& raw, const std::vector<Sample>& data,
                                     const std::vector<std::size_t>& indices);

std::vector<int> predict_all(const Model& model, const Vec& raw, const std::vector<Sample>& data);
double accuracy(const Model& model, const Vec& raw, const std::vector<Sample>& data);

/// √(Σ_spd d_AIRM² + Σ_siegel d²) between points of equal signature.
double product_distance(const gyro::ProductPoint& x, const gyro::ProductPoint& y);
/// Rows index `queries`, columns index `refs`.
Mat cross_distances(const std::vector<gyro::ProductPoint>& queries, const std::vector<gyro::ProductPoint>& refs);
Mat cross_distances_reference(const std::vector<gyro::ProductPoint>& queries,
                              const std::vector<gyro::ProductPoint>& refs);

/// Graph-embedding objective Σ_{i<j} |(d(x_i, x_j) / d_G(i, j))² - 1| over n
/// Siegel points of size m stored as consecutive siegel_point raw blocks.
struct DistortionResult {
  double loss = 0.0;
  Vec grad;
};

DistortionResult distortion(const Vec& raw, Eigen::Index m, const Mat& graph_distances, bool with_grad = true);
DistortionResult distortion_reference(const Vec& raw, Eigen::Index m, const Mat& graph_distances);

}  // namespace siegelnet::diff
