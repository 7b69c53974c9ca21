#pragma once

// Non-geometric comparison classifiers.

#include <cstdint>
#include <vector>

#include "siegelnet/gyro.hpp"

namespace siegelnet::data {

/// Majority vote among the k nearest training points under the product
/// distance. Vote ties go to the class with the smaller summed distance, then
/// the lower label.
std::vector<int> knn_predict(const std::vector<gyro::ProductPoint>& train, const std::vector<int>& train_labels,
                             const std::vector<gyro::ProductPoint>& queries, int k, int classes);

/// Flattened (upper-triangular, off-diagonals × √2) log p for SPD factors and
/// (u, log v) for Siegel factors, so Euclidean norms match the Frobenius ones.
Vec log_features(const gyro::ProductPoint& x);

struct LogFeatConfig {
  int epochs = 500;
  double lr = 0.05;
  double l2 = 1e-4;

  void validate() const;
};

/// Softmax regression on standardized log-features, full-batch Adam from zero.
class LogFeatMlr {
 public:
  void fit(const std::vector<gyro::ProductPoint>& x, const std::vector<int>& labels, int classes,
           const LogFeatConfig& cfg = {});
  std::vector<int> predict(const std::vector<gyro::ProductPoint>& x) const;

 private:
  Mat features(const std::vector<gyro::ProductPoint>& x) const;  // standardized, one row per sample

  Vec mean_, scale_;
  Mat w_;  // (features + 1) x classes, last row is the bias
};

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

}  // namespace siegelnet::data
