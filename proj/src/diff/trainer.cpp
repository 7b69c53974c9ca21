#include "siegelnet/diff/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace siegelnet::diff {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) fail(ErrorKind::ConfigError, "learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::ConfigError, "moment decay rates must lie in (0, 1)");
  }
  if (!(eps > 0.0)) fail(ErrorKind::ConfigError, "eps must be positive");
  if (epochs < 0) fail(ErrorKind::ConfigError, "epochs must be >= 0");
  if (batch_size < 1) fail(ErrorKind::ConfigError, "batch size must be >= 1");
}

Adam::Adam(Eigen::Index n, const TrainConfig& cfg) : cfg_(cfg), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}

void Adam::step(Vec& x, const Vec& grad) {
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
  x.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

FitResult fit(const Model& model, const Vec& initial, const std::vector<Sample>& train,
              const std::vector<Sample>& val, const TrainConfig& cfg) {
  cfg.validate();
  if (initial.size() != model.layout().size()) fail(ErrorKind::ShapeMismatch, "initial parameter size mismatch");
  if (train.empty()) fail(ErrorKind::ConfigError, "empty training set");
  for (const auto& s : train) {
    model.check_input(s.x);
    if (s.label < 0 || s.label >= model.spec().classes) fail(ErrorKind::ConfigError, "label out of range");
  }
  for (const auto& s : val) model.check_input(s.x);

  FitResult out;
  out.params = initial;
  Vec theta = initial;
  Adam opt(theta.size(), cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  const bool use_val = !val.empty();
  double best = use_val ? accuracy(model, theta, val) : std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      BatchResult r;
      try {
        r = batch_gradient(model, theta, train, batch);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::NumericalOverflow || e.kind() == ErrorKind::NotPositiveDefinite ||
            e.kind() == ErrorKind::SingularMatrix || e.kind() == ErrorKind::InvalidInput) {
          fail(ErrorKind::DivergedTraining, "epoch " + std::to_string(epoch) + ": " + e.what());
        }
        throw;
      }
      if (!std::isfinite(r.loss) || !r.grad.allFinite()) {
        fail(ErrorKind::DivergedTraining, "non-finite loss at epoch " + std::to_string(epoch));
      }
      loss_sum += r.loss * static_cast<double>(batch.size());
      correct += r.correct;
      opt.step(theta, r.grad);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(train.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.val_acc = use_val ? accuracy(model, theta, val) : std::numeric_limits<double>::quiet_NaN();
    out.trace.push_back(rec);

    const bool better = use_val ? rec.val_acc > best : rec.loss < best;
    if (better) {
      best = use_val ? rec.val_acc : rec.loss;
      out.params = theta;
      out.best_epoch = epoch;
    }
  }
  return out;
}

FitResult fit(const Model& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
              const TrainConfig& cfg) {
  return fit(model, model.init(cfg.seed), train, val, cfg);
}

}  // namespace siegelnet::diff
