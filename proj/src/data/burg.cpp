#include "siegelnet/data/burg.hpp"

namespace siegelnet::data {
namespace {

using matfun::HPDMatrix;
using matfun::MatFn;

constexpr double kRidge = 1e-9;
constexpr double kShrink = 1.0 - 1e-9;

CMat inv_sqrt_or_degenerate(const CMat& s, const char* what) {
  try {
    return matfun::spd_fun(HPDMatrix(matfun::hermitize(s)), MatFn::InvSqrt);
  } catch (const Error&) {
    fail(ErrorKind::DegenerateInput, std::string("singular ") + what + " error covariance");
  }
}

/// Pulls a complex symmetric w strictly inside the disk.
CMat into_disk(CMat w) {
  const Eigen::Index m = w.rows();
  for (int attempt = 0; attempt < 60; ++attempt) {
    const double top = Eigen::JacobiSVD<CMat>(w).singularValues()(0);
    const double gap = matfun::herm_eig(CMat(CMat::Identity(m, m) - w * w.adjoint())).values.minCoeff();
    if (top < 1.0 && gap > 1e-11) return w;
    w *= kShrink / std::max(top, 1.0);
    if (top < 1.0) w *= kShrink;
  }
  return w;
}

}  // namespace

ReflectionParams burg_parameterize(const CMat& series, int q) {
  const Eigen::Index m = series.rows();
  const Eigen::Index n = series.cols();
  if (q < 2) fail(ErrorKind::InvalidInput, "q must be >= 2");
  if (m < 1 || n <= 4 * q) fail(ErrorKind::InvalidInput, "series must have more than 4q samples");
  if (!series.allFinite()) fail(ErrorKind::InvalidInput, "non-finite series values");

  CMat cov = series * series.adjoint() / static_cast<double>(n);
  const double tr = cov.trace().real();
  if (!(tr > 1e-300)) fail(ErrorKind::DegenerateInput, "series has zero variance");
  cov = matfun::hermitize(cov + kRidge * tr * CMat::Identity(m, m));

  ReflectionParams out;
  out.p0 = HPDMatrix(cov);

  // f(:, j) and b(:, j) hold stage-k errors at time j; valid for j >= k.
  CMat f = series, b = series;
  for (int k = 1; k < q; ++k) {
    const Eigen::Index cnt = n - k;
    const CMat fk = f.rightCols(cnt);          // f_{k-1}(j), j = k..n-1
    const CMat bk = b.middleCols(k - 1, cnt);  // b_{k-1}(j-1)
    const CMat sff = fk * fk.adjoint() / static_cast<double>(cnt);
    const CMat sbb = bk * bk.adjoint() / static_cast<double>(cnt);
    const CMat sfb = fk * bk.adjoint() / static_cast<double>(cnt);
    const CMat sff_is = inv_sqrt_or_degenerate(sff, "forward");
    const CMat sbb_is = inv_sqrt_or_degenerate(sbb, "backward");
    const CMat raw = sff_is * sfb * sbb_is;
    const CMat om = into_disk(0.5 * (raw + raw.transpose()));
    out.reflections.emplace_back(om);

    const CMat pf_half = matfun::spd_fun(HPDMatrix(matfun::hermitize(sff)), MatFn::Sqrt);
    const CMat pb_half = matfun::spd_fun(HPDMatrix(matfun::hermitize(sbb)), MatFn::Sqrt);
    const CMat kf = -pf_half * om * sbb_is;
    const CMat kb = -pb_half * om.adjoint() * sff_is;
    CMat nf = CMat::Zero(m, n), nb = CMat::Zero(m, n);
    nf.rightCols(cnt) = fk + kf * bk;
    nb.rightCols(cnt) = bk + kb * fk;
    f = std::move(nf);
    b = std::move(nb);
  }
  return out;
}

gyro::ProductPoint to_network_input(const ReflectionParams& params) {
  std::vector<gyro::Factor> factors;
  factors.emplace_back(spd::SPDPoint(Mat(params.p0.mat().real())));
  for (const auto& w : params.reflections) factors.emplace_back(siegel::inverse_cayley(w));
  return gyro::ProductPoint(std::move(factors));
}

gyro::Signature radar_signature(Eigen::Index m, int q) {
  gyro::Signature sig{{gyro::FactorKind::Spd, m}};
  for (int k = 1; k < q; ++k) sig.push_back({gyro::FactorKind::Siegel, m});
  return sig;
}

}  // namespace siegelnet::data
