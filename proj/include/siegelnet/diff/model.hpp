#pragma once

// Classifier networks: an optional fully-connected layer per input factor
// followed by one MLR head per class.

#include <cstdint>
#include <string>
#include <vector>

#include "siegelnet/diff/params.hpp"

namespace siegelnet::diff {

enum class ModelKind { AfcQmlr, DfcQmlr, AfcVmlr, Qmlr, Vmlr };

std::string to_string(ModelKind k);
/// Accepts the CLI spelling ("afc-qmlr", ...); ConfigError otherwise.
ModelKind parse_model_kind(const std::string& name);

/// Default DFC output size for an input factor of size m
/// (3→2, 4→3, 5→3, 6→4, otherwise m-1).
Eigen::Index default_dfc_dim(Eigen::Index m);

struct ModelSpec {
  ModelKind kind = ModelKind::AfcQmlr;
  gyro::Signature input;
  int classes = 2;
  /// DFC output sizes per factor; empty means default_dfc_dim.
  std::vector<Eigen::Index> dfc_dims;
};

struct Sample {
  gyro::ProductPoint x;
  int label = 0;
};

class Model {
 public:
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const ParamLayout& layout() const { return layout_; }
  /// Signature after the FC layer (equal to the input without one).
  const gyro::Signature& hidden() const { return hidden_; }

  Vec init(std::uint64_t seed) const;

  /// ShapeMismatch/ConfigError unless x matches the input signature.
  void check_input(const gyro::ProductPoint& x) const;

  /// Parameter-only quantities (b^½, p^-½, log-Grams of a, ...) derived from
  /// the raw vector; shared by every sample of a batch.
  std::vector<Var> prepare(Tape& t, Var raw) const;
  /// Logit column for one input from prepared quantities (may live on another tape).
  Var logits(Tape& t, const std::vector<Var>& prepared, const TProduct& x) const;

  /// Tape path without gradients.
  Vec predict_logits(const Vec& raw, const gyro::ProductPoint& x) const;
  int predict(const Vec& raw, const gyro::ProductPoint& x) const;
  /// Independent evaluation through the plain layers module.
  Vec reference_logits(const Vec& raw, const gyro::ProductPoint& x) const;

 private:
  bool has_fc() const;
  bool is_vmlr() const;

  ModelSpec spec_;
  gyro::Signature hidden_;
  ParamLayout layout_;
  std::vector<std::size_t> fc_a_, fc_b_;       // per factor; npos where absent
  std::vector<std::size_t> head_a_, head_p_;   // per class
  std::vector<std::size_t> head_xi_, head_scale_;
};

}  // namespace siegelnet::diff
