#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "siegelnet/diff/geometry.hpp"
#include "siegelnet/diff/gradcheck.hpp"
#include "siegelnet/diff/trainer.hpp"
#include "test_util.hpp"

using namespace siegelnet;
using namespace siegelnet::diff;
using siegel::sample_upper_point;
using testutil::rel;
using Eigen::Index;

namespace {

// Two classes on the imaginary axis of the scalar Siegel space, split at iI.
std::vector<Sample> separable_scalar(int n, std::uint64_t seed) {
  testutil::Rng rng(seed);
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double t = (label == 0 ? -1.0 : 1.0) * rng.uniform(0.3, 1.5);
    const siegel::SiegelUpperPoint x(Mat::Constant(1, 1, rng.normal(0.2)), Mat::Constant(1, 1, std::exp(t)));
    out.push_back({gyro::ProductPoint(std::vector<gyro::Factor>{x}), label});
  }
  return out;
}

std::vector<Sample> random_product_samples(const gyro::Signature& sig, int n, int classes, std::uint64_t seed) {
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) {
    std::vector<gyro::Factor> f;
    std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(i) * 17;
    for (const auto& spec : sig) {
      if (spec.kind == gyro::FactorKind::Spd) f.emplace_back(spd::spd_sample(spec.dim, s++));
      else f.emplace_back(sample_upper_point(spec.dim, s++));
    }
    out.push_back({gyro::ProductPoint(std::move(f)), i % classes});
  }
  return out;
}

gyro::Signature radar_like() {
  return {{gyro::FactorKind::Spd, 3}, {gyro::FactorKind::Siegel, 3}};
}

}  // namespace

TEST(Materialize, Examples) {
  ParamLayout layout;
  const auto spd_i = layout.add("p", BlockKind::Spd, 3);
  const auto ch_i = layout.add("xi", BlockKind::Chamber, 2);
  const auto st_i = layout.add("b", BlockKind::Stiefel, 4, 2);
  Vec raw = Vec::Zero(layout.size());
  raw.segment(layout.block(ch_i).offset, 2) << -3.0, 4.0;

  EXPECT_LE(rel(std::get<matfun::SPDMatrix>(materialize(layout.block(spd_i), raw)).mat(), Mat::Identity(3, 3)), 1e-15);
  const Vec d = std::get<layers::ChamberDirection>(materialize(layout.block(ch_i), raw)).direction();
  EXPECT_NEAR(d(0), 0.8, 1e-15);
  EXPECT_NEAR(d(1), 0.6, 1e-15);
  // all-zero Stiefel raw is rank deficient but still materializes to a frame
  const Mat q = std::get<matfun::StiefelMatrix>(materialize(layout.block(st_i), raw)).mat();
  EXPECT_LE((q.transpose() * q - Mat::Identity(2, 2)).norm(), 1e-10);
}

TEST(Materialize, TotalOnRandomAndDegenerateInputs) {
  ParamLayout layout;
  layout.add("s", BlockKind::Sym, 3);
  layout.add("p", BlockKind::Spd, 3);
  layout.add("b", BlockKind::Stiefel, 3, 2);
  layout.add("xi", BlockKind::Chamber, 3);
  layout.add("x", BlockKind::SiegelPoint, 2);
  layout.add("y", BlockKind::ProductPoint, 1, 0, radar_like());
  layout.add("c", BlockKind::Scalar, 1);
  testutil::Rng rng(61);
  for (int t = 0; t < 100; ++t) {
    Vec raw = rng.gauss(layout.size(), 1, t % 3 == 0 ? 4.0 : 1.0).col(0);
    if (t % 5 == 0) raw.setZero();
    if (t % 7 == 0) raw.segment(layout.block(2).offset, 3) = raw.segment(layout.block(2).offset + 3, 3);  // equal columns
    for (const auto& b : layout.blocks()) EXPECT_NO_THROW(materialize(b, raw)) << b.name;
    Tape tape;
    const Var v = tape.variable(raw);
    for (const auto& b : layout.blocks()) EXPECT_NO_THROW(materialize(b, v)) << b.name;
  }
  const Mat q = std::get<matfun::StiefelMatrix>(materialize(layout.block(2), Vec::Zero(layout.size()))).mat();
  EXPECT_LE((q.transpose() * q - Mat::Identity(2, 2)).norm(), 1e-10);
}

TEST(Materialize, NonFiniteAndShapeErrors) {
  ParamLayout layout;
  layout.add("p", BlockKind::Spd, 2);
  Vec raw = Vec::Zero(layout.size());
  raw(0) = std::nan("");
  EXPECT_THROW(materialize(layout.block(0), raw), Error);
  try {
    materialize(layout.block(0), Vec(Vec::Zero(1)));
    ADD_FAILURE() << "expected ShapeMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Materialize, InverseParameterizations) {
  testutil::Rng rng(62);
  const Mat p = rng.spd(3);
  ParamLayout layout;
  layout.add("p", BlockKind::Spd, 3);
  EXPECT_LE(rel(std::get<matfun::SPDMatrix>(materialize(layout.block(0), raw_from_spd(p))).mat(), p), 1e-10);
  const auto x = sample_upper_point(2, 3);
  ParamLayout l2;
  l2.add("x", BlockKind::SiegelPoint, 2);
  EXPECT_LE(rel(std::get<siegel::SiegelUpperPoint>(materialize(l2.block(0), raw_from_siegel(x))).complex(), x.complex()),
            1e-10);
}

TEST(Tape, GradientZeroAtMinimum) {
  const auto x0 = sample_upper_point(3, 5);
  Tape t;
  const TSiegel x = variable(t, x0);
  const Var loss = distance_sq(x, constant(t, x0));
  t.backward(loss);
  EXPECT_LE(t.grad(x.u).norm() + t.grad(x.v).norm(), 1e-6);
}

TEST(Tape, ValuesMatchPlainLibrary) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 3);
    const auto x0 = sample_upper_point(m, s), y0 = sample_upper_point(m, s + 1);
    Tape t;
    const TSiegel x = constant(t, x0), y = constant(t, y0);
    EXPECT_NEAR(distance(x, y).scalar(), siegel::distance(x0, y0), 1e-10);
    EXPECT_NEAR(inner_S(x, y).scalar(), gyro::inner_S(x0, y0), 1e-10);
    EXPECT_LE(rel(value(oplus(x, y)).complex(), gyro::oplus(x0, y0).complex()), 1e-10);
    EXPECT_LE(rel(log_gram(x).value(), gyro::log_gram(x0)), 1e-10);
  }
}

// Tape gradient of q_logit w.r.t. the raw parameters of a and p, against
// central differences of the plain (non-tape) layers implementation.
TEST(Backward, QLogitAgainstPlainFiniteDifferences) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(s % 3);
    ParamLayout layout;
    layout.add("a", BlockKind::SiegelPoint, m);
    layout.add("p", BlockKind::SiegelPoint, m);
    testutil::Rng rng(100 + s);
    const Vec raw = rng.gauss(layout.size(), 1, 0.5).col(0);
    const auto x0 = sample_upper_point(m, s);

    auto plain = [&](const Vec& r) {
      const auto a = std::get<siegel::SiegelUpperPoint>(materialize(layout.block(0), r));
      const auto p = std::get<siegel::SiegelUpperPoint>(materialize(layout.block(1), r));
      return layers::q_logit(x0, {a, p});
    };
    Tape t;
    const Var rv = t.variable(raw);
    const TSiegel a = std::get<TSiegel>(materialize(layout.block(0), rv));
    const TSiegel p = std::get<TSiegel>(materialize(layout.block(1), rv));
    const Var loss = q_logit(constant(t, x0), TQHyperplane{a, p});
    EXPECT_NEAR(loss.scalar(), plain(raw), 1e-10);
    t.backward(loss);
    const Vec g = t.grad(rv).col(0);
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      Vec hi = raw, lo = raw;
      hi(i) += 1e-6;
      lo(i) -= 1e-6;
      const double fd = (plain(hi) - plain(lo)) / 2e-6;
      if (std::abs(g(i)) < 1e-8) continue;
      EXPECT_LE(std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-8), 1e-4) << "component " << i << " m=" << m;
    }
  }
}

TEST(GradCheck, EveryRegisteredOp) {
  const auto ops = differentiable_ops();
  EXPECT_GE(ops.size(), 20u);
  for (const auto& op : ops) {
    const GradCheckReport r = grad_check(op, 10, 7, 3);
    EXPECT_TRUE(r.passed()) << op << " max_rel_err=" << r.max_rel_err << " failures=" << r.failures;
  }
}

TEST(GradCheck, UnknownOp) {
  try {
    grad_check("no_such_op", 1, 0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotDifferentiable);
  }
}

TEST(Kernels, ParallelMatchesSerial) {
  const ModelSpec spec{ModelKind::AfcQmlr, radar_like(), 3, {}};
  const Model model(spec);
  const Vec raw = model.init(3);
  const auto data = random_product_samples(spec.input, 24, 3, 1);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const BatchResult a = batch_gradient(model, raw, data, idx);
  const BatchResult b = batch_gradient_reference(model, raw, data, idx);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  EXPECT_LE(rel(a.grad, b.grad), 1e-12);
  EXPECT_EQ(a.correct, b.correct);

  std::vector<gyro::ProductPoint> pts;
  for (const auto& d : data) pts.push_back(d.x);
  EXPECT_LE(rel(cross_distances(pts, pts), cross_distances_reference(pts, pts)), 1e-14);

  testutil::Rng rng(63);
  const Index n = 6;
  ParamLayout layout;
  for (Index i = 0; i < n; ++i) layout.add("x", BlockKind::SiegelPoint, 2);
  const Vec emb = rng.gauss(layout.size(), 1, 0.5).col(0);
  Mat g = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) g(i, j) = g(j, i) = rng.uniform(0.2, 1.5);
  const DistortionResult d1 = distortion(emb, 2, g), d2 = distortion_reference(emb, 2, g);
  EXPECT_NEAR(d1.loss, d2.loss, 1e-10);
  EXPECT_LE(rel(d1.grad, d2.grad), 1e-9);
}

TEST(Model, TapeLogitsMatchReferencePath) {
  const gyro::Signature single{{gyro::FactorKind::Siegel, 3}};
  for (ModelKind k : {ModelKind::AfcQmlr, ModelKind::DfcQmlr, ModelKind::AfcVmlr, ModelKind::Qmlr, ModelKind::Vmlr}) {
    const Model model(ModelSpec{k, single, 3, {}});
    const Vec raw = model.init(5) + testutil::Rng(5).gauss(model.layout().size(), 1, 0.1).col(0);
    for (const auto& s : random_product_samples(single, 5, 3, 9)) {
      EXPECT_LE(rel(model.predict_logits(raw, s.x), model.reference_logits(raw, s.x)), 1e-9) << to_string(k);
    }
  }
  const Model product(ModelSpec{ModelKind::DfcQmlr, radar_like(), 3, {}});
  const Vec raw = product.init(1);
  for (const auto& s : random_product_samples(radar_like(), 5, 3, 2))
    EXPECT_LE(rel(product.predict_logits(raw, s.x), product.reference_logits(raw, s.x)), 1e-9);
}

TEST(Model, KindsAndDefaults) {
  EXPECT_EQ(parse_model_kind("afc-qmlr"), ModelKind::AfcQmlr);
  EXPECT_EQ(parse_model_kind("vmlr"), ModelKind::Vmlr);
  EXPECT_THROW(parse_model_kind("bmlr"), Error);
  EXPECT_EQ(default_dfc_dim(3), 2);
  EXPECT_EQ(default_dfc_dim(4), 3);
  EXPECT_EQ(default_dfc_dim(5), 3);
  EXPECT_EQ(default_dfc_dim(6), 4);
  // VMLR needs a single Siegel factor
  try {
    Model m(ModelSpec{ModelKind::Vmlr, radar_like(), 3, {}});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(Fit, SeparableScalarTask) {
  const auto train = separable_scalar(80, 1);
  const Model model(ModelSpec{ModelKind::Qmlr, {{gyro::FactorKind::Siegel, 1}}, 2, {}});
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.lr = 5e-2;
  const FitResult r = fit(model, train, {}, cfg);
  EXPECT_GE(accuracy(model, r.params, train), 0.99);
  ASSERT_EQ(r.trace.size(), 200u);
  // 20-epoch window means never increase
  double prev = INFINITY;
  for (std::size_t w = 0; w + 20 <= r.trace.size(); w += 20) {
    double mean = 0.0;
    for (std::size_t i = w; i < w + 20; ++i) mean += r.trace[i].loss / 20.0;
    EXPECT_LE(mean, prev + 1e-12);
    prev = mean;
  }
  const FitResult again = fit(model, train, {}, cfg);
  EXPECT_EQ(again.params, r.params);
  for (std::size_t i = 0; i < r.trace.size(); ++i) EXPECT_EQ(again.trace[i].loss, r.trace[i].loss);
}

TEST(Fit, ZeroEpochsReturnsInitial) {
  const auto train = separable_scalar(10, 2);
  const Model model(ModelSpec{ModelKind::Qmlr, {{gyro::FactorKind::Siegel, 1}}, 2, {}});
  TrainConfig cfg;
  cfg.epochs = 0;
  const Vec init = model.init(4);
  EXPECT_EQ(fit(model, init, train, {}, cfg).params, init);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& x) { x.lr = 0; }, [](TrainConfig& x) { x.beta1 = 1.0; },
           [](TrainConfig& x) { x.beta2 = 0.0; }, [](TrainConfig& x) { x.batch_size = 0; },
           [](TrainConfig& x) { x.epochs = -1; }}) {
    TrainConfig bad;
    mutate(bad);
    try {
      bad.validate();
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
  }
}

TEST(Fit, SignatureMismatchRejected) {
  const Model model(ModelSpec{ModelKind::Qmlr, {{gyro::FactorKind::Siegel, 2}}, 2, {}});
  EXPECT_THROW(fit(model, separable_scalar(4, 1), {}, TrainConfig{}), Error);
}
