#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cmath>

namespace mgsim {

// Trapezoidal (bilinear) discretization of x' = A x + B u over one step h:
//   x[n+1] = phi x[n] + gamma (u[n] + u[n+1])
template <typename Scalar, int N, int M = 1>
struct TrapezoidalMaps {
  Eigen::Matrix<Scalar, N, N> phi;
  Eigen::Matrix<Scalar, N, M> gamma;
};

template <typename Scalar, int N, int M>
TrapezoidalMaps<Scalar, N, M> trapezoidal(const Eigen::Matrix<Scalar, N, N>& a,
                                          const Eigen::Matrix<Scalar, N, M>& b, Scalar h) {
  using Square = Eigen::Matrix<Scalar, N, N>;
  const Square identity = Square::Identity(a.rows(), a.cols());
  const Square lhs_inv = (identity - (h / Scalar(2)) * a).inverse();
  return {lhs_inv * (identity + (h / Scalar(2)) * a), lhs_inv * b * (h / Scalar(2))};
}

// Step length that makes the bilinear map reproduce the continuous response
// exactly at angular frequency omega (frequency pre-warping).
template <typename Scalar>
Scalar prewarped_step(Scalar omega, Scalar h) {
  if (omega <= Scalar(0)) return h;
  return Scalar(2) * std::tan(omega * h / Scalar(2)) / omega;
}

}  // namespace mgsim
