#pragma once

// Node embedding into the Siegel upper space by minimizing the distortion
// loss against a complete cosine-distance graph.

#include <cstdint>
#include <vector>

#include "siegelnet/siegel.hpp"

namespace siegelnet::data {

inline constexpr double kGraphDistanceFloor = 1e-6;

/// d(i, j) = 1 - cos(f_i, f_j), off-diagonal zeros floored at 1e-6.
Mat cosine_graph(const std::vector<Vec>& features);

struct GraphEmbeddingConfig {
  Eigen::Index m = 2;
  int epochs = 3000;
  double lr = 3e-3;
  /// Learning rate decays geometrically to lr * lr_final_ratio at the last epoch.
  double lr_final_ratio = 0.1;
  /// Raw-parameter std at initialization (all nodes start near iI).
  double init_spread = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GraphEmbedding {
  std::vector<siegel::SiegelUpperPoint> points;
  /// Σ_{i<j} |(d(x_i, x_j) / d_G(i, j))² - 1| divided by the number of pairs.
  double average_distortion = 0.0;
  /// Average distortion before each epoch's update, then once more at the end.
  std::vector<double> trace;
};

/// Full-batch Adam over one siegel_point block per node. Returns the iterate
/// with the lowest loss seen (the final one unless training oscillated).
GraphEmbedding embed_graph(const Mat& distances, const GraphEmbeddingConfig& cfg);

/// Average distortion of fixed points against a graph.
double average_distortion(const std::vector<siegel::SiegelUpperPoint>& points, const Mat& distances);

}  // namespace siegelnet::data
