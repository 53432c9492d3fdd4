#pragma once

#include "mgsim/signals/discrete.hpp"
#include "mgsim/signals/types.hpp"

namespace mgsim {

namespace detail {

template <typename Scalar>
void check_filter_step(Scalar cutoff_hz, Scalar dt, const char* name) {
  if (!(cutoff_hz > Scalar(0)))
    throw ConfigError(std::string(name) + ": cutoff must be positive");
  if (!(dt > Scalar(0))) throw ConfigError(std::string(name) + ": dt must be positive");
  if (dt * kTwoPi<Scalar> * cutoff_hz >= Scalar(1))
    throw ConfigError(std::string(name) + ": dt * 2*pi*cutoff must be below 1");
}

}  // namespace detail

// First-order unity-DC-gain low-pass, H(s) = wc / (s + wc), bilinear form.
// Channels share coefficients and are filtered independently.
template <typename Scalar, int Channels = 1>
class Lpf1 {
 public:
  using Sample = Eigen::Matrix<Scalar, Channels, 1>;

  Lpf1(Scalar cutoff_hz, Scalar dt) : cutoff_hz_(cutoff_hz) {
    detail::check_filter_step(cutoff_hz, dt, "Lpf1");
    const Scalar k = kTwoPi<Scalar> * cutoff_hz * dt / Scalar(2);
    pole_ = (Scalar(1) - k) / (Scalar(1) + k);
    gain_ = k / (Scalar(1) + k);
  }

  const Sample& step(const Sample& x) {
    y_ = pole_ * y_ + gain_ * (x + x_prev_);
    x_prev_ = x;
    return y_;
  }

  Scalar step(Scalar x)
    requires(Channels == 1)
  {
    return step(Sample::Constant(x))(0);
  }

  void reset(const Sample& value = Sample::Zero()) {
    y_ = value;
    x_prev_ = value;
  }

  const Sample& output() const { return y_; }
  Scalar cutoff_hz() const { return cutoff_hz_; }

 private:
  Scalar cutoff_hz_;
  Scalar pole_ = 0;
  Scalar gain_ = 0;
  Sample y_ = Sample::Zero();
  Sample x_prev_ = Sample::Zero();
};

// Second-order unity-DC-gain low-pass,
// H(s) = wn^2 / (s^2 + 2 zeta wn s + wn^2), trapezoidal state-space form.
template <typename Scalar, int Channels = 1>
class Lpf2 {
 public:
  using Sample = Eigen::Matrix<Scalar, Channels, 1>;

  Lpf2(Scalar cutoff_hz, Scalar damping, Scalar dt) : cutoff_hz_(cutoff_hz), damping_(damping) {
    detail::check_filter_step(cutoff_hz, dt, "Lpf2");
    if (!(damping > Scalar(0))) throw ConfigError("Lpf2: damping ratio must be positive");
    const Scalar wn = kTwoPi<Scalar> * cutoff_hz;
    Eigen::Matrix<Scalar, 2, 2> a;
    a << Scalar(0), Scalar(1), -wn * wn, -Scalar(2) * damping * wn;
    Eigen::Matrix<Scalar, 2, 1> b(Scalar(0), wn * wn);
    maps_ = trapezoidal(a, b, dt);
  }

  // Returns the filtered sample (first state, the position-like output).
  Sample step(const Sample& x) {
    // state_ rows: [y; y'], one column per channel
    state_ = maps_.phi * state_ + maps_.gamma * (x + x_prev_).transpose();
    x_prev_ = x;
    return state_.row(0).transpose();
  }

  Scalar step(Scalar x)
    requires(Channels == 1)
  {
    return step(Sample::Constant(x))(0);
  }

  void reset(const Sample& value = Sample::Zero()) {
    state_.setZero();
    state_.row(0) = value.transpose();
    x_prev_ = value;
  }

  Sample output() const { return state_.row(0).transpose(); }
  Scalar cutoff_hz() const { return cutoff_hz_; }
  Scalar damping() const { return damping_; }

 private:
  Scalar cutoff_hz_;
  Scalar damping_;
  TrapezoidalMaps<Scalar, 2, 1> maps_;
  Eigen::Matrix<Scalar, 2, Channels> state_ = Eigen::Matrix<Scalar, 2, Channels>::Zero();
  Sample x_prev_ = Sample::Zero();
};

}  // namespace mgsim
