#pragma once

// Stationary multichannel complex AR clutter simulation. Each series is
// generated from a normalized reflection-coefficient description
// (p0, Ω₁..Ω_{q-1}), converted to AR coefficients by the Levinson recursion.

#include <cstdint>
#include <vector>

#include "siegelnet/siegel.hpp"

namespace siegelnet::data {

struct ARDatasetConfig {
  Eigen::Index m = 3;
  /// Toeplitz lags: the AR order is q-1 and there are q-1 reflections.
  int q = 2;
  int classes = 3;
  int samples = 600;
  int length = 256;
  /// 0 makes every class identical; 1 spreads class phases over the circle.
  double separation = 1.0;
  /// Spectral radius of the class-mean reflection coefficients.
  double radius = 0.6;
  /// Entry-wise std of the per-sample perturbation around the class mean.
  double spread = 0.08;
  std::uint64_t seed = 0;

  void validate() const;
};

/// AR description: u_n + Σ c_j u_{n-j} = v_n with v_n ~ CN(0, innovation).
struct ARModel {
  std::vector<CMat> coeffs;  // c_1 .. c_{q-1}
  CMat innovation;
};

struct ReflectionParams {
  matfun::HPDMatrix p0;
  std::vector<siegel::SiegelDiskPoint> reflections;
};

struct ARSeries {
  CMat values;  // m x length, column n is u_n
  int label = 0;
  ReflectionParams truth;
};

/// Normalized multichannel Levinson recursion (Hermitian square roots).
ARModel levinson(const ReflectionParams& params);

/// Circular complex Gaussian draw, burn-in of 10·(order+1) steps from zero.
CMat simulate_series(const ARModel& model, Eigen::Index m, int length, std::uint64_t seed);

/// Per-sample ground truth for sample `index` (depends only on cfg and index).
ReflectionParams draw_reflection_params(const ARDatasetConfig& cfg, int label, std::uint64_t sample_seed);

/// Class labels cycle 0..M-1 so every class gets ⌊s/M⌋ or ⌈s/M⌉ samples.
std::vector<ARSeries> simulate_ar(const ARDatasetConfig& cfg);
std::vector<ARSeries> simulate_ar_serial(const ARDatasetConfig& cfg);

/// Seed for sample i derived from the dataset seed.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

}  // namespace siegelnet::data
