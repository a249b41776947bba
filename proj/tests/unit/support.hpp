#pragma once

#include <random>

#include <Eigen/Dense>

#include "cocycle_lab/symplectic.hpp"

namespace testing {

using cocycle_lab::Mat;

inline Mat standard_j(int d) {
  Mat j = Mat::Zero(2 * d, 2 * d);
  j.topRightCorner(d, d) = Mat::Identity(d, d);
  j.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return j;
}

inline double sym_defect(const Mat& m) {
  const Mat j = standard_j(static_cast<int>(m.rows()) / 2);
  return (m.transpose() * j * m - j).norm();
}

// Rank from the eigenvalues of P_V P_W P_V: a unit eigenvalue is a common
// direction. Independent of the SVD-of-[V|W] route in the library.
inline int common_directions(const Mat& v, const Mat& w, double tol = 1e-8) {
  const Mat pv = v * v.transpose(), pw = w * w.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(pv * pw * pv);
  int k = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 1.0 - tol) ++k;
  return k;
}

// Scaling and squaring with a long double Taylor series.
inline Mat expm_reference(const Mat& x) {
  using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  int s = 0;
  double nrm = x.norm();
  while (nrm > 0.1) {
    nrm /= 2;
    ++s;
  }
  LMat a = x.cast<long double>() / std::ldexp(1.0L, s);
  LMat term = LMat::Identity(x.rows(), x.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / static_cast<long double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum.cast<double>();
}

inline Mat random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat h(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) h(i, j) = h(j, i) = g(rng);
  return h;
}

}  // namespace testing
