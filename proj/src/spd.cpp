#include "siegelnet/spd.hpp"

#include <random>

namespace siegelnet::spd {

double spd_distance(const SPDPoint& p, const SPDPoint& q) {
  if (p.dim() != q.dim()) fail(ErrorKind::ShapeMismatch, "spd_distance dimension mismatch");
  const Mat s = matfun::spd_fun(p.p, matfun::MatFn::InvSqrt);
  const SPDMatrix inner(Mat(s * q.mat() * s));
  return matfun::spd_fun(inner, matfun::MatFn::Log).norm();
}

Mat spd_canonical_rep(const SPDPoint& p) { return matfun::spd_fun(p.p, matfun::MatFn::Sqrt); }

SPDPoint spd_sample(Eigen::Index m, std::uint64_t seed) {
  if (m < 1) fail(ErrorKind::InvalidInput, "m must be >= 1");
  std::mt19937_64 rng(seed ^ 0x5350'4400ULL);
  std::normal_distribution<double> n(0.0, 0.5);
  Mat s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      s(i, j) = n(rng);
      s(j, i) = s(i, j);
    }
  }
  return SPDPoint(matfun::sym_exp(matfun::RealSymMatrix(s)));
}

}  // namespace siegelnet::spd
