#pragma once

#include "mgsim/signals/transforms.hpp"

#include <algorithm>

namespace mgsim {

template <typename Scalar>
struct PllParams {
  Scalar kp = Scalar(92);
  Scalar ki = Scalar(4230);
  Scalar omega_nominal = Scalar(370);
  Scalar omega_min = Scalar(300);
  Scalar omega_max = Scalar(440);
  // Below this input magnitude the phase error is treated as zero.
  Scalar amplitude_floor = Scalar(1e-6);
};

// Synchronous-reference-frame PLL. The q-axis component, normalised by the
// input magnitude, is the phase error; a PI loop filter (trapezoidal
// integrator) sets the frequency estimate, which is clamped to the configured
// band with conditional integration.
template <typename Scalar>
class SrfPll {
 public:
  struct Output {
    Scalar theta;  // angle of the current sample, [0, 2pi)
    Scalar omega;  // rad/s
  };

  SrfPll(const PllParams<Scalar>& params, Scalar dt, Scalar theta0 = Scalar(0))
      : p_(params), dt_(dt), theta_(wrap_angle(theta0)), omega_(params.omega_nominal) {
    if (!(dt > Scalar(0))) throw ConfigError("SrfPll: dt must be positive");
    if (!(p_.omega_min < p_.omega_max)) throw ConfigError("SrfPll: empty frequency band");
    if (p_.omega_nominal < p_.omega_min || p_.omega_nominal > p_.omega_max)
      throw ConfigError("SrfPll: nominal frequency outside the clamp band");
  }

  Output step(const AlphaBeta<Scalar>& v) {
    const Scalar mag = v.norm();
    const Scalar err = mag > p_.amplitude_floor ? park(v, theta_).q() / mag : Scalar(0);

    const Scalar integ = integral_ + Scalar(0.5) * (err + err_prev_) * dt_;
    const Scalar unclamped = p_.omega_nominal + p_.kp * err + p_.ki * integ;
    omega_ = std::clamp(unclamped, p_.omega_min, p_.omega_max);
    if (omega_ == unclamped) integral_ = integ;
    err_prev_ = err;

    const Output out{theta_, omega_};
    theta_ = wrap_angle(theta_ + omega_ * dt_);
    return out;
  }

  Scalar theta() const { return theta_; }
  Scalar omega() const { return omega_; }
  const PllParams<Scalar>& params() const { return p_; }

 private:
  PllParams<Scalar> p_;
  Scalar dt_;
  Scalar theta_;
  Scalar omega_;
  Scalar integral_ = Scalar(0);
  Scalar err_prev_ = Scalar(0);
};

}  // namespace mgsim
