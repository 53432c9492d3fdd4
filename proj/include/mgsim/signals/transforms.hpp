#pragma once

#include "mgsim/signals/types.hpp"

namespace mgsim {

// Amplitude-invariant Clarke transform: a balanced set of peak amplitude V
// maps to an alpha-beta vector of length V. Instantaneous power therefore
// carries the 3/2 factor, p = 3/2 (v_a i_a + v_b i_b), and every power
// formula in the library assumes this convention.
template <typename Scalar>
AlphaBeta<Scalar> clarke(const ThreePhase<Scalar>& s) {
  const Scalar two_thirds = Scalar(2) / Scalar(3);
  const Scalar inv_sqrt3 = Scalar(1) / std::sqrt(Scalar(3));
  return {two_thirds * (s(0) - Scalar(0.5) * s(1) - Scalar(0.5) * s(2)),
          inv_sqrt3 * (s(1) - s(2))};
}

// Zero-sequence free reconstruction; inverse_clarke(clarke(s)) == s only for
// zero-sum s.
template <typename Scalar>
ThreePhase<Scalar> inverse_clarke(const AlphaBeta<Scalar>& v) {
  const Scalar half_sqrt3 = std::sqrt(Scalar(3)) / Scalar(2);
  return {v.alpha(), -Scalar(0.5) * v.alpha() + half_sqrt3 * v.beta(),
          -Scalar(0.5) * v.alpha() - half_sqrt3 * v.beta()};
}

// Rotation by -theta into a frame turning at theta.
template <typename Scalar>
Dq<Scalar> park(const AlphaBeta<Scalar>& v, Scalar theta) {
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  return {c * v.alpha() + s * v.beta(), -s * v.alpha() + c * v.beta()};
}

template <typename Scalar>
AlphaBeta<Scalar> inverse_park(const Dq<Scalar>& v, Scalar theta) {
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  return {c * v.d() - s * v.q(), s * v.d() + c * v.q()};
}

// Plane rotation of a two-axis vector by theta (counter-clockwise).
template <typename Derived>
Vector2<typename Derived::Scalar> rotate(const Eigen::MatrixBase<Derived>& v,
                                         typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  const Scalar c = std::cos(theta);
  const Scalar s = std::sin(theta);
  return {c * v(0) - s * v(1), s * v(0) + c * v(1)};
}

// Quantities that are only meaningful relative to the transform convention.
template <typename Scalar>
Scalar instantaneous_active_power(const AlphaBeta<Scalar>& v, const AlphaBeta<Scalar>& i) {
  return Scalar(1.5) * (v.alpha() * i.alpha() + v.beta() * i.beta());
}

template <typename Scalar>
Scalar instantaneous_reactive_power(const AlphaBeta<Scalar>& v, const AlphaBeta<Scalar>& i) {
  return Scalar(1.5) * (v.beta() * i.alpha() - v.alpha() * i.beta());
}

}  // namespace mgsim
