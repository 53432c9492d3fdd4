#pragma once

#include "mgsim/signals/discrete.hpp"
#include "mgsim/signals/types.hpp"

namespace mgsim {

// Second-order generalized integrator:
//   in-phase   D(s) = k w s  / (s^2 + k w s + w^2)   (band-pass)
//   quadrature Q(s) = k w^2  / (s^2 + k w s + w^2)   (90 deg behind D at w)
// Trapezoidal, pre-warped at the centre frequency so the quadrature relation
// holds exactly at w in discrete time.
template <typename Scalar, int Channels = 1>
class Sogi {
 public:
  using Sample = Eigen::Matrix<Scalar, Channels, 1>;
  struct Output {
    Sample in_phase;
    Sample quadrature;
  };

  Sogi(Scalar gain, Scalar dt) : gain_(gain), dt_(dt) {
    if (!(gain > Scalar(0))) throw ConfigError("Sogi: gain must be positive");
    if (!(dt > Scalar(0))) throw ConfigError("Sogi: dt must be positive");
  }

  // Coefficients for centre frequency omega; cached while omega is unchanged.
  void prepare(Scalar omega) {
    if (omega == omega_) return;
    if (!(omega > Scalar(0))) throw std::domain_error("Sogi: centre frequency must be positive");
    omega_ = omega;
    Eigen::Matrix<Scalar, 2, 2> a;
    a << -gain_ * omega, -omega, omega, Scalar(0);
    Eigen::Matrix<Scalar, 2, 1> b(gain_ * omega, Scalar(0));
    maps_ = trapezoidal(a, b, prewarped_step(omega, dt_));
  }

  // In-phase output the block would produce for a zero new input; the actual
  // output is free_in_phase() + feedthrough() * u.
  Sample free_in_phase() const {
    return (maps_.phi.row(0) * state_ + maps_.gamma(0) * u_prev_.transpose()).transpose();
  }
  Scalar feedthrough() const { return maps_.gamma(0); }

  Output commit(const Sample& u) {
    state_ = maps_.phi * state_ + maps_.gamma * (u + u_prev_).transpose();
    u_prev_ = u;
    return output();
  }

  Output step(const Sample& u, Scalar omega) {
    prepare(omega);
    return commit(u);
  }

  Output output() const { return {state_.row(0).transpose(), state_.row(1).transpose()}; }

  void reset() {
    state_.setZero();
    u_prev_.setZero();
  }

  Scalar gain() const { return gain_; }

 private:
  Scalar gain_;
  Scalar dt_;
  Scalar omega_ = Scalar(-1);
  TrapezoidalMaps<Scalar, 2, 1> maps_{};
  Eigen::Matrix<Scalar, 2, Channels> state_ = Eigen::Matrix<Scalar, 2, Channels>::Zero();
  Sample u_prev_ = Sample::Zero();
};

// Multiple SOGIs with cross-feedback decoupling on an alpha-beta signal: each
// SOGI sees the input minus the in-phase outputs of all the others, so a
// component at one tracked frequency does not leak into another's estimate.
// The decoupling loop is algebraic under the trapezoidal rule and is solved
// exactly each step (rank-one update, no one-step delay).
//
// Sequence separation per frequency uses the quadrature outputs:
//   positive: (a' - qb', qa' + b') / 2
//   negative: (a' + qb', b' - qa') / 2
template <typename Scalar>
class SogiBank {
 public:
  static constexpr std::array<int, 5> kMultiples{1, 3, 5, 7, 11};
  using Block = Sogi<Scalar, 2>;
  using Set = SequenceSet<AlphaBeta<Scalar>>;

  SogiBank(Scalar gain, Scalar dt) : blocks_{make_blocks(gain, dt)} {}

  Set step(const AlphaBeta<Scalar>& v, Scalar omega) {
    constexpr std::size_t n = kMultiples.size();
    std::array<Vector2<Scalar>, n> free;
    std::array<Scalar, n> g{};
    Vector2<Scalar> weighted = Vector2<Scalar>::Zero();
    Scalar denom = Scalar(1);
    for (std::size_t k = 0; k < n; ++k) {
      blocks_[k].prepare(omega * Scalar(kMultiples[k]));
      free[k] = blocks_[k].free_in_phase();
      g[k] = blocks_[k].feedthrough();
      const Scalar r = Scalar(1) / (Scalar(1) - g[k]);
      weighted += r * (free[k] + g[k] * v);
      denom += g[k] * r;
    }
    // sum of all in-phase outputs at the new step
    const Vector2<Scalar> total = weighted / denom;

    for (std::size_t k = 0; k < n; ++k) {
      const Vector2<Scalar> own = (free[k] + g[k] * (v - total)) / (Scalar(1) - g[k]);
      const auto out = blocks_[k].commit(v - total + own);
      in_phase_[k] = out.in_phase;
      quadrature_[k] = out.quadrature;
    }

    Set set;
    set.fundamental_pos = positive(0);
    set.fundamental_neg = negative(0);
    for (std::size_t i = 0; i < kHarmonicOrders.size(); ++i) {
      const int order = kHarmonicOrders[i];
      const std::size_t k = slot(order < 0 ? -order : order);
      set.harmonic[i] = order > 0 ? positive(k) : negative(k);
    }
    return set;
  }

  void reset() {
    for (auto& b : blocks_) b.reset();
  }

  // Sum of in-phase outputs of the last step (reconstruction of the input).
  Vector2<Scalar> reconstruction() const {
    Vector2<Scalar> s = Vector2<Scalar>::Zero();
    for (const auto& v : in_phase_) s += v;
    return s;
  }

 private:
  static std::array<Block, kMultiples.size()> make_blocks(Scalar gain, Scalar dt) {
    return {Block(gain, dt), Block(gain, dt), Block(gain, dt), Block(gain, dt), Block(gain, dt)};
  }

  static std::size_t slot(int multiple) {
    for (std::size_t k = 0; k < kMultiples.size(); ++k)
      if (kMultiples[k] == multiple) return k;
    throw std::out_of_range("SogiBank: untracked multiple");
  }

  AlphaBeta<Scalar> positive(std::size_t k) const {
    const auto& v = in_phase_[k];
    const auto& q = quadrature_[k];
    return {Scalar(0.5) * (v(0) - q(1)), Scalar(0.5) * (q(0) + v(1))};
  }

  AlphaBeta<Scalar> negative(std::size_t k) const {
    const auto& v = in_phase_[k];
    const auto& q = quadrature_[k];
    return {Scalar(0.5) * (v(0) + q(1)), Scalar(0.5) * (v(1) - q(0))};
  }

  std::array<Block, kMultiples.size()> blocks_;
  std::array<Vector2<Scalar>, kMultiples.size()> in_phase_{};
  std::array<Vector2<Scalar>, kMultiples.size()> quadrature_{};
};

}  // namespace mgsim
