#pragma once

// Reverse-mode vs. central finite differences over a registry of named
// differentiable operations.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "siegelnet/matfun.hpp"

namespace siegelnet::diff {

inline constexpr double kFdStep = 1e-6;
inline constexpr double kGradRelTol = 1e-4;
/// Components whose analytic gradient is below this are not compared.
inline constexpr double kGradSkip = 1e-8;
/// Ops through vvd resample configurations whose cross-ratio spectrum has a
/// gap below this (divided differences are ill-conditioned there).
inline constexpr double kSpectralGapGuard = 1e-3;

struct GradCheckReport {
  std::string op;
  int trials = 0;
  int compared = 0;    // components compared
  int failures = 0;    // components above tolerance
  double max_rel_err = 0.0;
  /// Worst relative error per parameter block name.
  std::map<std::string, double> per_param;

  bool passed() const { return failures == 0 && compared > 0; }
};

std::vector<std::string> differentiable_ops();

/// NotDifferentiable for unknown names. Sizes are drawn from 1..max_m
/// (ops that compress dimensions use at least 2).
GradCheckReport grad_check(const std::string& op, int trials, std::uint64_t seed, Eigen::Index max_m = 4);

}  // namespace siegelnet::diff
