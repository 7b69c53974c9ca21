#include "siegelnet/cli/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>

#include "siegelnet/data/baselines.hpp"
#include "siegelnet/data/graph.hpp"
#include "siegelnet/data/radar.hpp"
#include "siegelnet/diff/gradcheck.hpp"
#include "siegelnet/diff/trainer.hpp"
#include "siegelnet/layers.hpp"
#include "siegelnet/spd.hpp"

namespace siegelnet::cli {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
using siegel::SiegelUpperPoint;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

/// Accumulates one named check. Errors count as failed trials.
class Check {
 public:
  Check(std::string name, double tol) {
    r_.name = std::move(name);
    r_.tolerance = tol;
  }

  void record(double err, const std::string& what = {}) {
    ++r_.trials;
    if (std::isnan(err) || err > r_.worst) r_.worst = std::isnan(err) ? kInf : err;
    if (!(err <= r_.tolerance)) {
      ++r_.failures;
      if (r_.detail.empty()) r_.detail = what.empty() ? "error " + std::to_string(err) : what;
    }
  }

  void error(const std::exception& e) {
    ++r_.trials;
    ++r_.failures;
    if (r_.detail.empty()) r_.detail = e.what();
  }

  /// Runs f(trial) -> error for `n` trials, catching library errors per trial.
  template <class F>
  Check& trials(int n, F&& f) {
    for (int t = 0; t < n; ++t) {
      try {
        record(f(t));
      } catch (const Error& e) {
        error(e);
      }
    }
    return *this;
  }

  CheckResult done(Clock::time_point start) {
    r_.seconds = seconds_since(start);
    return r_;
  }

 private:
  CheckResult r_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return data::sample_seed(data::sample_seed(seed, a), b);
}

template <class A, class B>
double rel(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

Mat gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Mat out(r, c);
  for (Eigen::Index k = 0; k < out.size(); ++k) out.data()[k] = g(rng);
  return out;
}

Mat random_sym(std::mt19937_64& rng, Eigen::Index m, double sd = 1.0) {
  return matfun::symmetrize(gaussian(rng, m, m, sd));
}

layers::ChamberDirection random_chamber(std::mt19937_64& rng, Eigen::Index m) {
  Vec d = gaussian(rng, m, 1).cwiseAbs();
  std::sort(d.begin(), d.end(), std::greater<>());
  if (d.norm() == 0.0) d(0) = 1.0;
  return layers::ChamberDirection(d / d.norm());
}

struct Ctx {
  int trials;
  long max_m;
  std::uint64_t seed;
  Eigen::Index m_of(int t, long lo = 1) const { return lo + t % (max_m - lo + 1); }
  SiegelUpperPoint point(int id, int t, int k = 0) const {
    return siegel::sample_upper_point(m_of(t), mix(seed, static_cast<std::uint64_t>(id), 3 * t + k));
  }
};

// ---- matfun

void matfun_checks(const Ctx& c, std::vector<CheckResult>& out) {
  auto spd = [&](int id, int t) { return spd::spd_sample(c.m_of(t), mix(c.seed, id, t)).p; };
  auto t0 = Clock::now();
  out.push_back(Check("matfun.log_exp_roundtrip", 1e-8)
                    .trials(c.trials, [&](int t) {
                      const auto p = spd(100, t);
                      const Mat l = matfun::spd_fun(p, matfun::MatFn::Log);
                      return rel(matfun::sym_exp(matfun::RealSymMatrix(l)).mat(), p.mat());
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("matfun.sqrt_square", 1e-9)
                    .trials(c.trials, [&](int t) {
                      const auto p = spd(101, t);
                      const Mat s = matfun::spd_fun(p, matfun::MatFn::Sqrt);
                      return rel(s * s, p.mat());
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("matfun.eig_reconstruction", 1e-10)
                    .trials(c.trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 102, t));
                      const Eigen::Index m = c.m_of(t);
                      const Mat s = random_sym(rng, m);
                      const auto e = matfun::sym_eig(s);
                      const double r1 = rel(e.vectors * e.values.asDiagonal() * e.vectors.transpose(), s);
                      const CMat h = matfun::hermitize(gaussian(rng, m, m).cast<cplx>() + cplx(0, 1) * gaussian(rng, m, m).cast<cplx>());
                      const auto he = matfun::herm_eig(h);
                      const double r2 = rel(CMat(he.vectors * he.values.cast<cplx>().asDiagonal() * he.vectors.adjoint()), h);
                      return std::max(r1, r2);
                    })
                    .done(t0));
  t0 = Clock::now();
  Check jvp("matfun.jvp_vs_fd", 1e-4);
  const matfun::MatFn fns[] = {matfun::MatFn::Sqrt, matfun::MatFn::InvSqrt, matfun::MatFn::Log, matfun::MatFn::Inv,
                               matfun::MatFn::Exp};
  for (int t = 0; t < c.trials; ++t) {
    for (const auto f : fns) {
      try {
        std::mt19937_64 rng(mix(c.seed, 103, t));
        const auto p = spd(104, t);
        const Mat e = random_sym(rng, p.dim());
        const Mat analytic = matfun::matfun_jvp(p, f, e);
        const double h = 1e-6;
        const Mat fd = (matfun::spd_fun(matfun::SPDMatrix(p.mat() + h * e), f) -
                        matfun::spd_fun(matfun::SPDMatrix(p.mat() - h * e), f)) /
                       (2 * h);
        jvp.record((analytic - fd).norm() / std::max(analytic.norm(), 1e-8));
      } catch (const Error& err) {
        jvp.error(err);
      }
    }
  }
  out.push_back(jvp.done(t0));
}

// ---- siegel

void siegel_checks(const Ctx& c, std::vector<CheckResult>& out) {
  auto t0 = Clock::now();
  out.push_back(Check("siegel.symmetry", 1e-9)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(200, t, 0), y = c.point(200, t, 1);
                      return std::abs(siegel::distance(x, y) - siegel::distance(y, x));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.identity", 1e-9)
                    .trials(c.trials, [&](int t) { return siegel::distance(c.point(201, t), c.point(201, t)); })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.triangle", 0.0)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(202, t, 0), y = c.point(202, t, 1), z = c.point(202, t, 2);
                      const double slack = siegel::distance(x, z) - siegel::distance(x, y) - siegel::distance(y, z);
                      return std::max(0.0, slack - 1e-8);
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.sp_invariance", 1e-8)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(203, t, 0), y = c.point(203, t, 1);
                      const auto s = siegel::sample_symplectic(x.dim(), mix(c.seed, 204, t));
                      return std::abs(siegel::distance(siegel::symplectic_action(s, x), siegel::symplectic_action(s, y)) -
                                      siegel::distance(x, y));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.cayley_roundtrip", 1e-9)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(205, t);
                      const auto w = siegel::sample_disk_point(x.dim(), mix(c.seed, 206, t));
                      const double a = rel(siegel::inverse_cayley(siegel::cayley(x)).complex(), x.complex());
                      const double b = rel(siegel::cayley(siegel::inverse_cayley(w)).w(), w.w());
                      return std::max(a, b);
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.cross_ratio_spectrum", 1e-8)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(207, t, 0), y = c.point(207, t, 1);
                      const Vec general = siegel::cross_ratio_spectrum(x, y);  // throws on complex spectra
                      const Vec herm = siegel::cross_ratio_eigenvalues(x, y);
                      if (general.minCoeff() < -1e-8 || general.maxCoeff() >= 1.0) return kInf;
                      return (general - herm).cwiseAbs().maxCoeff();
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.spd_restriction", 1e-8)
                    .trials(c.trials, [&](int t) {
                      const Eigen::Index m = c.m_of(t);
                      const auto p = spd::spd_sample(m, mix(c.seed, 208, t)), q = spd::spd_sample(m, mix(c.seed, 209, t));
                      const Mat zero = Mat::Zero(m, m);
                      return std::abs(siegel::distance(SiegelUpperPoint(zero, p.mat()), SiegelUpperPoint(zero, q.mat())) -
                                      spd::spd_distance(p, q));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("siegel.spo_orthogonal", 1e-10)
                    .trials(c.trials, [&](int t) {
                      const auto k = siegel::sample_spo(c.m_of(t), mix(c.seed, 210, t));
                      const Mat& s = k.mat();
                      return rel(s.transpose() * s, Mat::Identity(s.rows(), s.cols()));
                    })
                    .done(t0));
}

// ---- gyro

void gyro_checks(const Ctx& c, std::vector<CheckResult>& out) {
  auto t0 = Clock::now();
  std::vector<double> ratios;
  Check cv("gyro.distance_ratio_cv", 1e-6), constant("gyro.distance_ratio_sqrt2", 1e-9);
  for (int t = 0; t < c.trials; ++t) {
    try {
      const auto x = c.point(300, t, 0), y = c.point(300, t, 1);
      const double d = siegel::distance(x, y);
      if (d <= 1e-3) continue;
      const double r = gyro::norm_S(gyro::oplus(gyro::ominus(x), y)) / d;
      ratios.push_back(r);
      constant.record(std::abs(r - std::numbers::sqrt2));
    } catch (const Error& e) {
      constant.error(e);
    }
  }
  if (!ratios.empty()) {
    const Eigen::Map<const Vec> r(ratios.data(), static_cast<Eigen::Index>(ratios.size()));
    const double mean = r.mean();
    cv.record(std::sqrt((r.array() - mean).square().mean()) / mean);
  }
  out.push_back(cv.done(t0));
  out.push_back(constant.done(t0));

  t0 = Clock::now();
  out.push_back(Check("gyro.k_invariance", 1e-8)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(301, t, 0), y = c.point(301, t, 1);
                      const auto k = siegel::sample_spo(x.dim(), mix(c.seed, 302, t));
                      return std::abs(gyro::inner_S(siegel::symplectic_action(k, x), siegel::symplectic_action(k, y)) -
                                      gyro::inner_S(x, y));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("gyro.representative_independence", 1e-9)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(303, t);
                      const auto k = siegel::sample_spo(x.dim(), mix(c.seed, 304, t));
                      const Mat g = siegel::canonical_rep(x).mat() * k.mat();
                      const Mat l = matfun::spd_fun(matfun::SPDMatrix(g * g.transpose()), matfun::MatFn::Log);
                      return rel(l, gyro::log_gram(x));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("gyro.product_reduction", 1e-12)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(305, t, 0), y = c.point(305, t, 1);
                      const gyro::ProductPoint px({x}), py({y});
                      return std::max(std::abs(gyro::inner_S(px, py) - gyro::inner_S(x, y)),
                                      std::abs(gyro::norm_S(px) - gyro::norm_S(x)));
                    })
                    .done(t0));
}

// ---- layers

void layer_checks(const Ctx& c, std::vector<CheckResult>& out) {
  auto t0 = Clock::now();
  {
    Check hand("layers.hand_values", 1e-12);
    try {
      const double e = std::numbers::e;
      const SiegelUpperPoint ie(Mat::Zero(1, 1), Mat::Constant(1, 1, e)), o = SiegelUpperPoint::origin(1);
      hand.record(std::abs(layers::q_distance(ie, {ie, o}) - std::numbers::sqrt2));
      hand.record(std::abs(layers::q_distance(o, {ie, o})));
      const gyro::ProductPoint x2({ie, ie}), p2({o, o});
      hand.record(std::abs(layers::q_product_distance(x2, {x2, p2}) - 2.0));
    } catch (const Error& err) {
      hand.error(err);
    }
    out.push_back(hand.done(t0));
  }
  t0 = Clock::now();
  out.push_back(Check("layers.distance_at_anchor", 1e-12)
                    .trials(c.trials, [&](int t) {
                      const auto a = c.point(400, t, 0), p = c.point(400, t, 1);
                      return layers::q_distance(p, {a, p});
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.logit_distance_consistency", 1e-9)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(401, t, 0), a = c.point(401, t, 1), p = c.point(401, t, 2);
                      const layers::QHyperplane h{a, p};
                      const double l = std::abs(layers::q_logit(x, h));
                      return std::abs(l - layers::q_distance(x, h) * layers::q_denominator(h)) / std::max(1.0, l);
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.product_reduction", 1e-12)
                    .trials(c.trials, [&](int t) {
                      const auto x = c.point(402, t, 0), a = c.point(402, t, 1), p = c.point(402, t, 2);
                      const layers::ProductQHyperplane ph{gyro::ProductPoint({a}), gyro::ProductPoint({p})};
                      const gyro::ProductPoint px({x});
                      return std::max(std::abs(layers::q_product_distance(px, ph) - layers::q_distance(x, {a, p})),
                                      std::abs(layers::q_product_logit(px, ph) - layers::q_logit(x, {a, p})));
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.vvd_bound", 0.0)
                    .trials(c.trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 403, t));
                      const auto x = c.point(404, t, 0), p = c.point(404, t, 1);
                      const layers::VHyperplane h{p, random_chamber(rng, x.dim()), 1.0};
                      const double b = layers::v_bound(x, h);
                      return std::max(0.0, -b) + std::max(0.0, b - siegel::distance(x, p) - 1e-10);
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.afc_two_path", 1e-9)
                    .trials(c.trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 405, t));
                      const auto x = c.point(406, t);
                      const Eigen::Index m = x.dim();
                      const layers::AFCParams th{matfun::RealSymMatrix(random_sym(rng, m)),
                                                 spd::spd_sample(m, mix(c.seed, 407, t)).p};
                      const auto direct = layers::afc_forward(x, th);
                      const auto action = siegel::symplectic_action(
                          siegel::canonical_rep(SiegelUpperPoint(th.a.mat(), th.b.mat())), x);
                      return rel(direct.complex(), action.complex());
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.fc_closure", 0.0)
                    .trials(c.trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 408, t));
                      const auto x = siegel::sample_upper_point(c.m_of(t, 2), mix(c.seed, 409, t));
                      const Eigen::Index m = x.dim(), m2 = 1 + static_cast<Eigen::Index>(t % (m - 1));
                      const layers::AFCParams afc{matfun::RealSymMatrix(random_sym(rng, m)),
                                                  spd::spd_sample(m, mix(c.seed, 410, t)).p};
                      const layers::DFCParams dfc{matfun::RealSymMatrix(random_sym(rng, m2)),
                                                  matfun::stiefel_qr(gaussian(rng, m, m2))};
                      const auto ya = layers::afc_forward(x, afc), yd = layers::dfc_forward(x, dfc);
                      const double lo = std::min(matfun::sym_eig(ya.v()).values.minCoeff(),
                                                 matfun::sym_eig(yd.v()).values.minCoeff());
                      const double asym = std::max((ya.u() - ya.u().transpose()).norm(), (yd.u() - yd.u().transpose()).norm());
                      return (lo > 0.0 && ya.u().allFinite() && yd.u().allFinite() ? 0.0 : 1.0) + asym;
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("layers.spd_specialization", 1e-12)
                    .trials(c.trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 411, t));
                      const Eigen::Index m = c.m_of(t, 2), m2 = m - 1;
                      const auto v = spd::spd_sample(m, mix(c.seed, 412, t));
                      const auto b = spd::spd_sample(m, mix(c.seed, 413, t));
                      const SiegelUpperPoint x(Mat::Zero(m, m), v.mat());
                      const auto ya = layers::afc_forward(x, {matfun::RealSymMatrix(Mat::Zero(m, m)), b.p});
                      const Mat r = matfun::spd_fun(b.p, matfun::MatFn::Sqrt);
                      const auto q = matfun::stiefel_qr(gaussian(rng, m, m2));
                      const auto yd = layers::dfc_forward(x, {matfun::RealSymMatrix(Mat::Zero(m2, m2)), q});
                      return std::max({rel(ya.v(), r * v.mat() * r), ya.u().norm(),
                                       rel(yd.v(), q.mat().transpose() * v.mat() * q.mat())});
                    })
                    .done(t0));
}

// ---- diff

void diff_checks(const Ctx& c, std::vector<CheckResult>& out) {
  const long grad_m = std::min<long>(c.max_m, 4);
  for (const auto& op : diff::differentiable_ops()) {
    const auto t0 = Clock::now();
    Check ck("diff.grad." + op, diff::kGradRelTol);
    try {
      const auto r = diff::grad_check(op, c.trials, mix(c.seed, 500), grad_m);
      ck.record(r.compared > 0 ? r.max_rel_err : kInf,
                r.compared > 0 ? std::to_string(r.failures) + " of " + std::to_string(r.compared) + " components above tolerance"
                               : "no components compared");
    } catch (const Error& e) {
      ck.error(e);
    }
    out.push_back(ck.done(t0));
  }

  auto t0 = Clock::now();
  out.push_back(Check("diff.materialize_total", 0.0)
                    .trials(c.trials, [&](int t) {
                      const Eigen::Index m = c.m_of(t);
                      diff::ParamLayout lay;
                      lay.add("sym", diff::BlockKind::Sym, m);
                      lay.add("spd", diff::BlockKind::Spd, m);
                      lay.add("stiefel", diff::BlockKind::Stiefel, m + 1, m);
                      lay.add("chamber", diff::BlockKind::Chamber, m);
                      lay.add("point", diff::BlockKind::SiegelPoint, m);
                      lay.add("product", diff::BlockKind::ProductPoint, m, 0,
                              {{gyro::FactorKind::Spd, m}, {gyro::FactorKind::Siegel, m}});
                      lay.add("scalar", diff::BlockKind::Scalar, 1);
                      std::mt19937_64 rng(mix(c.seed, 501, t));
                      const Vec raw = gaussian(rng, lay.size(), 1, 2.0);
                      // t % 7 == 0 also tries an all-zero vector
                      const Vec use = t % 7 == 0 ? Vec(Vec::Zero(lay.size())) : raw;
                      for (const auto& b : lay.blocks()) diff::materialize(b, use);
                      return 0.0;
                    })
                    .done(t0));

  t0 = Clock::now();
  {
    // Small separable radar task; loss means over consecutive 20-epoch
    // windows must not increase.
    Check mono("diff.training_loss_windows", 0.0);
    try {
      data::RadarDatasetConfig rc;
      rc.ar.m = 2;
      rc.ar.samples = 120;
      rc.ar.seed = mix(c.seed, 502);
      const auto d = data::make_radar_dataset(rc);
      std::vector<diff::Sample> train;
      for (std::size_t i : d.split.train) train.push_back({d.points[i], d.labels[i]});
      const diff::Model model({diff::ModelKind::AfcQmlr, d.signature, rc.ar.classes, {}});
      diff::TrainConfig tc;
      tc.epochs = 60;
      tc.seed = mix(c.seed, 503);
      const auto fit = diff::fit(model, train, {}, tc);
      std::vector<double> means;
      for (int w = 0; w + 20 <= tc.epochs; w += 20) {
        double s = 0.0;
        for (int e = w; e < w + 20; ++e) s += fit.trace[static_cast<std::size_t>(e + 1)].loss;
        means.push_back(s / 20.0);
      }
      for (std::size_t k = 1; k < means.size(); ++k) mono.record(std::max(0.0, means[k] - means[k - 1]));
    } catch (const Error& e) {
      mono.error(e);
    }
    out.push_back(mono.done(t0));
  }

  t0 = Clock::now();
  {
    Check par("diff.parallel_matches_serial", 1e-10);
    try {
      data::RadarDatasetConfig rc;
      rc.ar.m = 2;
      rc.ar.q = 3;
      rc.ar.samples = 24;
      rc.ar.seed = mix(c.seed, 504);
      const auto d = data::make_radar_dataset(rc);
      std::vector<diff::Sample> s;
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < d.points.size(); ++i) {
        s.push_back({d.points[i], d.labels[i]});
        idx.push_back(i);
      }
      for (auto kind : {diff::ModelKind::AfcQmlr, diff::ModelKind::DfcQmlr, diff::ModelKind::Qmlr}) {
        const diff::Model model({kind, d.signature, rc.ar.classes, {}});
        const Vec raw = model.init(mix(c.seed, 505));
        const auto a = diff::batch_gradient(model, raw, s, idx), b = diff::batch_gradient_reference(model, raw, s, idx);
        par.record(std::max(std::abs(a.loss - b.loss), rel(a.grad, b.grad)));
      }
      par.record(rel(diff::cross_distances(d.points, d.points), diff::cross_distances_reference(d.points, d.points)));
      std::mt19937_64 rng(mix(c.seed, 506));
      const Mat g = data::cosine_graph({gaussian(rng, 3, 1), gaussian(rng, 3, 1), gaussian(rng, 3, 1), gaussian(rng, 3, 1)});
      const Vec raw = gaussian(rng, 4 * 6, 1, 0.3);
      const auto a = diff::distortion(raw, 2, g), b = diff::distortion_reference(raw, 2, g);
      par.record(std::max(std::abs(a.loss - b.loss) / std::max(1.0, b.loss), rel(a.grad, b.grad)));
    } catch (const Error& e) {
      par.error(e);
    }
    out.push_back(par.done(t0));
  }
}

// ---- data

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
         });
}

bool same_points(const std::vector<gyro::ProductPoint>& a, const std::vector<gyro::ProductPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].signature() != b[i].signature()) return false;
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const auto& fa = a[i].factors()[k];
      const auto& fb = b[i].factors()[k];
      if (const auto* p = std::get_if<gyro::SPDPoint>(&fa)) {
        if (!bitwise_equal(p->mat(), std::get<gyro::SPDPoint>(fb).mat())) return false;
      } else {
        const auto& x = std::get<SiegelUpperPoint>(fa);
        const auto& y = std::get<SiegelUpperPoint>(fb);
        if (!bitwise_equal(x.u(), y.u()) || !bitwise_equal(x.v(), y.v())) return false;
      }
    }
  }
  return true;
}

void data_checks(const Ctx& c, std::vector<CheckResult>& out, bool full) {
  auto t0 = Clock::now();
  {
    Check valid("data.pipeline_validity", 0.0);
    struct Shape {
      long m;
      int q, classes, samples;
    };
    const Shape shapes[] = {{1, 2, 2, 40}, {2, 3, 3, 60}, {3, 2, 3, 60}, {3, 4, 4, 80}, {5, 2, 3, 60}, {6, 3, 4, 80}};
    for (const auto& sh : shapes) {
      if (sh.m > c.max_m) continue;
      try {
        data::RadarDatasetConfig rc;
        rc.ar.m = sh.m;
        rc.ar.q = sh.q;
        rc.ar.classes = sh.classes;
        rc.ar.samples = sh.samples * (full ? 4 : 1);
        rc.ar.seed = mix(c.seed, 600, static_cast<std::uint64_t>(sh.m * 10 + sh.q));
        const auto d = data::make_radar_dataset(rc);
        for (const auto& x : d.points) valid.record(x.signature() == d.signature ? 0.0 : 1.0);
      } catch (const Error& e) {
        valid.error(e);
      }
    }
    out.push_back(valid.done(t0));
  }

  t0 = Clock::now();
  {
    // kNN accuracy must not drop as classes move apart.
    Check mono("data.knn_monotone_in_separation", 0.0);
    try {
      double prev = -1.0;
      for (double sep : {0.0, 0.3, 1.0}) {
        data::RadarDatasetConfig rc;
        rc.ar.m = 2;
        rc.ar.samples = full ? 600 : 150;
        rc.ar.separation = sep;
        rc.ar.seed = mix(c.seed, 601);
        const auto d = data::make_radar_dataset(rc);
        std::vector<gyro::ProductPoint> tr, te;
        std::vector<int> ytr, yte;
        for (auto i : d.split.train) tr.push_back(d.points[i]), ytr.push_back(d.labels[i]);
        for (auto i : d.split.test) te.push_back(d.points[i]), yte.push_back(d.labels[i]);
        const double acc = data::accuracy(data::knn_predict(tr, ytr, te, 5, rc.ar.classes), yte);
        if (prev >= 0.0) mono.record(std::max(0.0, prev - acc), "accuracy fell from " + std::to_string(prev) + " to " + std::to_string(acc));
        prev = acc;
      }
    } catch (const Error& e) {
      mono.error(e);
    }
    out.push_back(mono.done(t0));
  }

  const int burg_trials = full ? 20 : 4;
  t0 = Clock::now();
  out.push_back(Check("data.burg_white_noise", 0.1)
                    .trials(burg_trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 602, t));
                      const Eigen::Index m = c.m_of(t);
                      const double sd = std::sqrt(0.5);
                      const CMat u = gaussian(rng, m, 4000, sd).cast<cplx>() + cplx(0, 1) * gaussian(rng, m, 4000, sd).cast<cplx>();
                      const auto est = data::burg_parameterize(u, 3);
                      double err = Eigen::JacobiSVD<CMat>(est.p0.mat() - CMat::Identity(m, m)).singularValues()(0);
                      for (const auto& w : est.reflections) err = std::max(err, Eigen::JacobiSVD<CMat>(w.w()).singularValues()(0));
                      return err;
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("data.burg_roundtrip", 0.1)
                    .trials(burg_trials, [&](int t) {
                      data::ARDatasetConfig ac;
                      ac.m = c.m_of(t);
                      ac.q = 2 + t % 2;
                      const auto truth = data::draw_reflection_params(ac, t % ac.classes, mix(c.seed, 603, t));
                      const CMat u = data::simulate_series(data::levinson(truth), ac.m, 4000, mix(c.seed, 604, t));
                      const auto est = data::burg_parameterize(u, ac.q);
                      double err = 0.0;
                      for (std::size_t k = 0; k < est.reflections.size(); ++k) {
                        err = std::max(err, Eigen::JacobiSVD<CMat>(est.reflections[k].w() - truth.reflections[k].w())
                                                .singularValues()(0));
                      }
                      return err;
                    })
                    .done(t0));
  t0 = Clock::now();
  out.push_back(Check("data.lag1_autocorrelation", 0.05)
                    .trials(burg_trials, [&](int t) {
                      std::mt19937_64 rng(mix(c.seed, 605, t));
                      std::uniform_real_distribution<double> rad(0.0, 0.9), ang(0.0, 2 * std::numbers::pi);
                      data::ReflectionParams rp;
                      rp.p0 = matfun::HPDMatrix(CMat::Identity(1, 1));
                      rp.reflections.emplace_back(CMat::Constant(1, 1, std::polar(rad(rng), ang(rng))));
                      const auto model = data::levinson(rp);
                      const CMat u = data::simulate_series(model, 1, 4000, mix(c.seed, 606, t));
                      cplx num = 0.0;
                      for (Eigen::Index n = 1; n < u.cols(); ++n) num += u(0, n) * std::conj(u(0, n - 1));
                      return std::abs(num / u.row(0).squaredNorm() + model.coeffs[0](0, 0));
                    })
                    .done(t0));

  t0 = Clock::now();
  {
    Check zero("data.distortion_zero_iff_exact", 1e-10);
    try {
      for (Eigen::Index m = 1; m <= std::min<long>(c.max_m, 3); ++m) {
        const double dg = 0.7;
        Mat g(2, 2);
        g << 0, dg, dg, 0;
        const SiegelUpperPoint o = SiegelUpperPoint::origin(m);
        const SiegelUpperPoint x(Mat::Zero(m, m), std::exp(dg / std::sqrt(static_cast<double>(m))) * Mat::Identity(m, m));
        zero.record(data::average_distortion({o, x}, g));
        const SiegelUpperPoint off(Mat::Zero(m, m), 1.1 * x.v());
        const double l = data::average_distortion({o, off}, g);
        zero.record(l > 1e-3 ? 0.0 : 1.0, "inexact embedding gave zero loss");
      }
    } catch (const Error& e) {
      zero.error(e);
    }
    out.push_back(zero.done(t0));
  }

  t0 = Clock::now();
  {
    Check fitc("data.embed_small_graphs", 0.05);
    try {
      data::GraphEmbeddingConfig gc;
      gc.epochs = 600;
      gc.lr = 2e-2;
      gc.seed = mix(c.seed, 607);
      Mat g2(2, 2);
      g2 << 0, 1, 1, 0;
      const auto e2 = data::embed_graph(g2, gc);
      fitc.record(5.0 * std::abs(siegel::distance(e2.points[0], e2.points[1]) - 1.0), "two-node fit off by > 0.01");
      const Mat g3 = Mat::Ones(3, 3) - Mat::Identity(3, 3);
      const auto e3 = data::embed_graph(g3, gc);
      const Vec d{{siegel::distance(e3.points[0], e3.points[1]), siegel::distance(e3.points[0], e3.points[2]),
                   siegel::distance(e3.points[1], e3.points[2])}};
      fitc.record(d.maxCoeff() / d.minCoeff() - 1.0, "equilateral distances differ by > 5%");
    } catch (const Error& e) {
      fitc.error(e);
    }
    out.push_back(fitc.done(t0));
  }

  t0 = Clock::now();
  {
    Check io("data.serialization_roundtrip", 0.0);
    const auto dir = std::filesystem::temp_directory_path() /
                     ("siegelnet-selfcheck-" + std::to_string(mix(c.seed, 608, static_cast<std::uint64_t>(
                                                                       Clock::now().time_since_epoch().count()))));
    try {
      std::filesystem::create_directories(dir);
      data::RadarDatasetConfig rc;
      rc.ar.q = 3;
      rc.ar.samples = 12;
      rc.ar.seed = mix(c.seed, 609);
      const auto d = data::make_radar_dataset(rc);
      data::save(d, dir / "d.json");
      const auto d2 = data::load_dataset(dir / "d.json");
      io.record(same_points(d.points, d2.points) && d.labels == d2.labels && d.split.train == d2.split.train &&
                        d.split.test == d2.split.test && d.signature == d2.signature
                    ? 0.0
                    : 1.0,
                "dataset round trip changed data");

      data::Embeddings e;
      for (std::uint64_t i = 0; i < 5; ++i) e.points.push_back(siegel::sample_upper_point(2, mix(c.seed, 611, i)));
      e.labels = {0, 1, 0, 1, 1};
      data::save(e, dir / "e.json");
      const auto e2 = data::load_embeddings(dir / "e.json");
      std::vector<gyro::ProductPoint> pa, pb;
      for (const auto& p : e.points) pa.emplace_back(std::vector<gyro::Factor>{p});
      for (const auto& p : e2.points) pb.emplace_back(std::vector<gyro::Factor>{p});
      io.record(same_points(pa, pb) && e.labels == e2.labels ? 0.0 : 1.0, "embedding round trip changed data");

      const diff::Model model({diff::ModelKind::DfcQmlr, d.signature, 3, {}});
      data::Checkpoint ck{model.spec(), model.init(mix(c.seed, 612)), 7, {}};
      data::save(ck, dir / "c.json");
      const auto ck2 = data::load_checkpoint(dir / "c.json");
      io.record(bitwise_equal(ck.params, ck2.params) && ck2.spec.kind == ck.spec.kind && ck2.spec.input == ck.spec.input
                    ? 0.0
                    : 1.0,
                "checkpoint round trip changed data");
    } catch (const std::exception& e) {
      io.error(e);
    }
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
    out.push_back(io.done(t0));
  }

  t0 = Clock::now();
  {
    Check det("data.deterministic_generation", 0.0);
    try {
      data::RadarDatasetConfig rc;
      rc.ar.samples = 30;
      rc.ar.q = 3;
      rc.ar.seed = mix(c.seed, 613);
      const auto a = data::make_radar_dataset(rc), b = data::make_radar_dataset(rc), s = data::make_radar_dataset_serial(rc);
      det.record(same_points(a.points, b.points) && same_points(a.points, s.points) && a.split.test == s.split.test ? 0.0 : 1.0,
                 "repeat or serial generation differs");
    } catch (const Error& e) {
      det.error(e);
    }
    out.push_back(det.done(t0));
  }
}

}  // namespace

Level parse_level(const std::string& s) {
  if (s == "fast") return Level::Fast;
  if (s == "full") return Level::Full;
  fail(ErrorKind::ConfigError, "level must be fast or full, got \"" + s + "\"");
}

std::string to_string(Level level) { return level == Level::Fast ? "fast" : "full"; }

int level_trials(Level level) { return level == Level::Fast ? 100 : 1000; }
long level_max_m(Level level) { return level == Level::Fast ? 3 : 6; }

bool SelfcheckReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

nlohmann::json SelfcheckReport::to_json() const {
  nlohmann::json j{{"schema_version", 1}, {"kind", "selfcheck"}, {"level", cli::to_string(level)}, {"seed", seed},
                   {"passed", passed()}, {"seconds", seconds}};
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"passed", c.passed()},
                           {"trials", c.trials},
                           {"failures", c.failures},
                           {"worst", std::isfinite(c.worst) ? nlohmann::json(c.worst) : nlohmann::json("inf")},
                           {"tolerance", c.tolerance},
                           {"seconds", c.seconds},
                           {"detail", c.detail}});
  }
  return j;
}

SelfcheckReport run_selfcheck(Level level, std::uint64_t seed, const std::function<void(const CheckResult&)>& progress) {
  const auto start = Clock::now();
  const Ctx ctx{level_trials(level), level_max_m(level), seed};
  SelfcheckReport report;
  report.level = level;
  report.seed = seed;
  using Suite = std::function<void(std::vector<CheckResult>&)>;
  const std::vector<Suite> suites = {
      [&](auto& out) { matfun_checks(ctx, out); },
      [&](auto& out) { siegel_checks(ctx, out); },
      [&](auto& out) { gyro_checks(ctx, out); },
      [&](auto& out) { layer_checks(ctx, out); },
      [&](auto& out) { diff_checks(ctx, out); },
      [&](auto& out) { data_checks(ctx, out, level == Level::Full); },
  };
  for (const auto& suite : suites) {
    std::vector<CheckResult> part;
    suite(part);
    for (auto& r : part) {
      if (progress) progress(r);
      report.checks.push_back(std::move(r));
    }
  }
  report.seconds = seconds_since(start);
  return report;
}

}  // namespace siegelnet::cli
