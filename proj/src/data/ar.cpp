#include "siegelnet/data/ar.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <random>

namespace siegelnet::data {
namespace {

using matfun::HPDMatrix;
using matfun::MatFn;

constexpr double kMaxReflectionNorm = 0.95;

CMat complex_gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd) {
  std::normal_distribution<double> d(0.0, sd);
  CMat out(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) out(i, j) = cplx(d(rng), d(rng));
  }
  return out;
}

double spectral_norm(const CMat& a) {
  return Eigen::JacobiSVD<CMat>(a).singularValues()(0);
}

}  // namespace

void ARDatasetConfig::validate() const {
  if (m < 1) fail(ErrorKind::ConfigError, "m must be >= 1");
  if (q < 2) fail(ErrorKind::ConfigError, "q must be >= 2");
  if (classes < 2) fail(ErrorKind::ConfigError, "need at least 2 classes (M >= 2)");
  if (samples < classes) fail(ErrorKind::ConfigError, "need at least one sample per class (s >= M)");
  if (length <= q) fail(ErrorKind::ConfigError, "series length must exceed q");
  if (!(separation >= 0.0) || !std::isfinite(separation)) fail(ErrorKind::ConfigError, "separation must be >= 0");
  if (!(radius >= 0.0 && radius < kMaxReflectionNorm)) {
    fail(ErrorKind::ConfigError, "radius must lie in [0, 0.95)");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) fail(ErrorKind::ConfigError, "spread must be >= 0");
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ARModel levinson(const ReflectionParams& params) {
  const CMat& p0 = params.p0.mat();
  const Eigen::Index m = p0.rows();
  const CMat id = CMat::Identity(m, m);
  CMat pf = p0, pb = p0;
  std::vector<CMat> a{id}, b{id};
  for (const auto& refl : params.reflections) {
    if (refl.dim() != m) fail(ErrorKind::ShapeMismatch, "reflection coefficient size mismatch");
    const CMat& om = refl.w();
    const HPDMatrix pf_h(pf), pb_h(pb);
    const CMat pf_half = matfun::spd_fun(pf_h, MatFn::Sqrt);
    const CMat pb_half = matfun::spd_fun(pb_h, MatFn::Sqrt);
    const CMat delta = pf_half * om * pb_half;
    const CMat kf = -delta * matfun::spd_fun(pb_h, MatFn::Inv);
    const CMat kb = -delta.adjoint() * matfun::spd_fun(pf_h, MatFn::Inv);

    const std::size_t order = a.size();  // current order + 1
    std::vector<CMat> na(order + 1, CMat::Zero(m, m)), nb(order + 1, CMat::Zero(m, m));
    for (std::size_t j = 0; j <= order; ++j) {
      const CMat aj = j < order ? a[j] : CMat::Zero(m, m);
      const CMat bprev = j > 0 ? b[j - 1] : CMat::Zero(m, m);
      na[j] = aj + kf * bprev;
      nb[j] = bprev + kb * aj;
    }
    a = std::move(na);
    b = std::move(nb);
    pf = matfun::hermitize(pf_half * (id - om * om.adjoint()) * pf_half);
    pb = matfun::hermitize(pb_half * (id - om.adjoint() * om) * pb_half);
  }
  ARModel out;
  out.coeffs.assign(a.begin() + 1, a.end());
  out.innovation = pf;
  return out;
}

CMat simulate_series(const ARModel& model, Eigen::Index m, int length, std::uint64_t seed) {
  if (length < 1) fail(ErrorKind::ConfigError, "series length must be positive");
  const std::size_t order = model.coeffs.size();
  const int burn = 10 * static_cast<int>(order + 1);
  const Eigen::LLT<CMat> llt(model.innovation);
  if (llt.info() != Eigen::Success) fail(ErrorKind::NotPositiveDefinite, "innovation covariance is not HPD");
  const CMat chol = llt.matrixL();

  std::mt19937_64 rng(seed);
  const int total = burn + length;
  CMat u = CMat::Zero(m, total);
  for (int n = 0; n < total; ++n) {
    CVec next = chol * complex_gaussian(rng, m, 1, std::sqrt(0.5)).col(0);
    for (std::size_t j = 1; j <= order; ++j) {
      if (n - static_cast<int>(j) < 0) break;
      next -= model.coeffs[j - 1] * u.col(n - static_cast<int>(j));
    }
    u.col(n) = next;
  }
  return u.rightCols(length);
}

ReflectionParams draw_reflection_params(const ARDatasetConfig& cfg, int label, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::Index m = cfg.m;
  ReflectionParams out;

  // Nuisance: the zero-lag covariance has the same law for every class.
  const CMat g = complex_gaussian(rng, m, m, std::sqrt(0.5));
  out.p0 = HPDMatrix(CMat(g * g.adjoint() / static_cast<double>(m) + 0.25 * CMat::Identity(m, m)));

  const double theta = cfg.separation * 2.0 * std::numbers::pi * label / cfg.classes;
  const CMat mean = cfg.radius * std::polar(1.0, theta) * CMat::Identity(m, m);
  for (int k = 1; k < cfg.q; ++k) {
    const CMat e = complex_gaussian(rng, m, m, cfg.spread);
    CMat w = mean + 0.5 * (e + e.transpose());
    const double s = spectral_norm(w);
    if (s > kMaxReflectionNorm) w *= kMaxReflectionNorm / s;
    out.reflections.emplace_back(w);
  }
  return out;
}

namespace {

ARSeries make_series(const ARDatasetConfig& cfg, std::size_t i) {
  ARSeries s;
  s.label = static_cast<int>(i % static_cast<std::size_t>(cfg.classes));
  const std::uint64_t seed = sample_seed(cfg.seed, i);
  s.truth = draw_reflection_params(cfg, s.label, seed);
  s.values = simulate_series(levinson(s.truth), cfg.m, cfg.length, sample_seed(seed, 1));
  return s;
}

}  // namespace

std::vector<ARSeries> simulate_ar(const ARDatasetConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.samples);
  std::vector<ARSeries> out(n);
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      out[i] = make_series(cfg, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<ARSeries> simulate_ar_serial(const ARDatasetConfig& cfg) {
  cfg.validate();
  std::vector<ARSeries> out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.samples); ++i) out.push_back(make_series(cfg, i));
  return out;
}

}  // namespace siegelnet::data
