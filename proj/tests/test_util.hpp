#pragma once

// Small random-matrix helpers shared by the unit tests. Kept separate from the
// library samplers so tests do not reuse the code under test to make inputs.

#include <random>

#include "siegelnet/matfun.hpp"

namespace testutil {

using siegelnet::CMat;
using siegelnet::Mat;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Mat gauss(Eigen::Index r, Eigen::Index c, double sd = 1.0) {
    Mat a(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) a(i, j) = normal(sd);
    return a;
  }
  Mat sym(Eigen::Index m, double sd = 1.0) {
    const Mat a = gauss(m, m, sd);
    return 0.5 * (a + a.transpose());
  }
  // A Aᵀ/m + I/2: comfortably positive definite without using the library's exp.
  Mat spd(Eigen::Index m) {
    const Mat a = gauss(m, m);
    return a * a.transpose() / static_cast<double>(m) + 0.5 * Mat::Identity(m, m);
  }
  CMat cgauss(Eigen::Index r, Eigen::Index c) {
    return gauss(r, c).cast<std::complex<double>>() + std::complex<double>(0, 1) * gauss(r, c).cast<std::complex<double>>();
  }

 private:
  std::mt19937_64 gen_;
};

template <class A, class B>
double rel(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace testutil
