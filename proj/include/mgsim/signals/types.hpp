#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgsim {

template <typename Scalar> using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

// Instantaneous (a, b, c) values of a voltage or current.
template <typename Scalar> using ThreePhase = Vector3<Scalar>;

// Two-axis vectors tagged with their reference frame. Both are plain Eigen
// 2-vectors underneath, so arithmetic composes as usual, but conversion from
// an arbitrary expression is explicit: a dq vector never silently becomes an
// alpha-beta one.
template <typename Scalar>
class AlphaBeta : public Vector2<Scalar> {
  using Base = Vector2<Scalar>;

 public:
  AlphaBeta() : Base(Base::Zero()) {}
  AlphaBeta(Scalar alpha, Scalar beta) : Base(alpha, beta) {}
  template <typename Derived>
  explicit AlphaBeta(const Eigen::MatrixBase<Derived>& other) : Base(other) {}
  template <typename Derived>
  AlphaBeta& operator=(const Eigen::MatrixBase<Derived>& other) {
    Base::operator=(other);
    return *this;
  }

  Scalar alpha() const { return (*this)(0); }
  Scalar beta() const { return (*this)(1); }
};

template <typename Scalar>
class Dq : public Vector2<Scalar> {
  using Base = Vector2<Scalar>;

 public:
  Dq() : Base(Base::Zero()) {}
  Dq(Scalar d, Scalar q) : Base(d, q) {}
  template <typename Derived>
  explicit Dq(const Eigen::MatrixBase<Derived>& other) : Base(other) {}
  template <typename Derived>
  Dq& operator=(const Eigen::MatrixBase<Derived>& other) {
    Base::operator=(other);
    return *this;
  }

  Scalar d() const { return (*this)(0); }
  Scalar q() const { return (*this)(1); }
};

// Harmonic components tracked alongside the fundamental, as signed sequence
// orders: +h rotates with the fundamental, -h against it.
inline constexpr std::array<int, 4> kHarmonicOrders{3, -5, 7, -11};

inline std::size_t harmonic_slot(int order) {
  for (std::size_t i = 0; i < kHarmonicOrders.size(); ++i)
    if (kHarmonicOrders[i] == order) return i;
  throw std::out_of_range("harmonic order " + std::to_string(order) +
                          " is not in the tracked set");
}

// Fundamental positive/negative sequence plus the tracked harmonics of one
// signal, in whichever frame the extractor produces.
template <typename Vec>
struct SequenceSet {
  Vec fundamental_pos;
  Vec fundamental_neg;
  std::array<Vec, kHarmonicOrders.size()> harmonic;

  Vec& harmonic_at(int order) { return harmonic[harmonic_slot(order)]; }
  const Vec& harmonic_at(int order) const { return harmonic[harmonic_slot(order)]; }

  static auto magnitude(const Vec& v) { return v.norm(); }
};

template <typename Scalar>
inline constexpr Scalar kTwoPi = Scalar(2) * std::numbers::pi_v<Scalar>;

template <typename Scalar>
Scalar wrap_angle(Scalar theta) {
  theta = std::fmod(theta, kTwoPi<Scalar>);
  if (theta < Scalar(0)) theta += kTwoPi<Scalar>;
  return theta;
}

// Thrown when parameters make a block unusable (unstable step, bad cutoff).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mgsim
