#pragma once

#include <cstdint>
#include <vector>

#include "siegelnet/diff/kernels.hpp"

namespace siegelnet::diff {

struct TrainConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int epochs = 300;
  int batch_size = 32;
  std::uint64_t seed = 0;

  /// ConfigError on out-of-range values.
  void validate() const;
};

/// Plain Adam on a flat vector.
class Adam {
 public:
  Adam(Eigen::Index n, const TrainConfig& cfg);
  void step(Vec& x, const Vec& grad);
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  TrainConfig cfg_;
  Vec m_, v_;
  int t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN without a validation set
};

struct FitResult {
  Vec params;
  std::vector<EpochRecord> trace;
  int best_epoch = 0;  // 0 = initial parameters
};

/// Minibatch Adam on mean cross-entropy. Returns the parameters with the best
/// validation accuracy (earliest on ties), or the lowest training loss when
/// `val` is empty. NaN/inf loss raises DivergedTraining naming the epoch.
FitResult fit(const Model& model, const Vec& initial, const std::vector<Sample>& train,
              const std::vector<Sample>& val, const TrainConfig& cfg);
FitResult fit(const Model& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
              const TrainConfig& cfg);

}  // namespace siegelnet::diff
