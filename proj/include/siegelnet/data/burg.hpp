#pragma once

#include "siegelnet/data/ar.hpp"
#include "siegelnet/gyro.hpp"

namespace siegelnet::data {

struct RadarSample {
  ReflectionParams params;
  int label = 0;
};

/// Multichannel Burg estimate of (p0, Ω₁..Ω_{q-1}) from an m x N series.
/// p0 gets a 1e-9·trace ridge; each Ω is symmetrized and pulled inside the
/// disk by (1 - 1e-9) if round-off puts it on the boundary.
ReflectionParams burg_parameterize(const CMat& series, int q);

/// (Re p0, inverse_cayley(Ω₁), ..., inverse_cayley(Ω_{q-1})).
gyro::ProductPoint to_network_input(const ReflectionParams& params);

gyro::Signature radar_signature(Eigen::Index m, int q);

}  // namespace siegelnet::data
