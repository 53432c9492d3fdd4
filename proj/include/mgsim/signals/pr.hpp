#pragma once

#include "mgsim/signals/discrete.hpp"
#include "mgsim/signals/types.hpp"

#include <vector>

namespace mgsim {

template <typename Scalar>
struct Resonator {
  int harmonic = 1;               // centre at harmonic * omega0
  Scalar gain = Scalar(0);        // k_r: extra gain at the centre
  Scalar cutoff = Scalar(2);      // w_c, rad/s
};

template <typename Scalar>
struct PrParams {
  Scalar kp = Scalar(0);
  std::vector<Resonator<Scalar>> resonators;
};

// Proportional-resonant controller
//   G(s) = kp + sum_k 2 kr_k wc s / (s^2 + 2 wc s + (k w0)^2)
// whose gain at s = j k w0 is exactly kp + kr_k. Each resonator is a
// trapezoidal state-space block pre-warped at its own centre, so the centre
// stays in place at any step size. w0 is supplied every step and may move.
template <typename Scalar, int Channels = 1>
class PrController {
 public:
  using Sample = Eigen::Matrix<Scalar, Channels, 1>;

  PrController(PrParams<Scalar> params, Scalar dt, Scalar omega_nominal)
      : p_(std::move(params)), dt_(dt), cache_(p_.resonators.size()) {
    if (!(dt > Scalar(0))) throw ConfigError("PrController: dt must be positive");
    for (const auto& r : p_.resonators) {
      if (r.harmonic < 1) throw ConfigError("PrController: harmonic must be >= 1");
      if (!(r.cutoff > Scalar(0))) throw ConfigError("PrController: cutoff must be positive");
      if (Scalar(r.harmonic) * omega_nominal * dt >= std::numbers::pi_v<Scalar>)
        throw ConfigError("PrController: resonator at harmonic " + std::to_string(r.harmonic) +
                          " is above the Nyquist frequency");
    }
    states_.assign(p_.resonators.size(), State::Zero());
  }

  Sample step(const Sample& error, Scalar omega0) {
    Sample out = p_.kp * error;
    for (std::size_t i = 0; i < p_.resonators.size(); ++i) {
      const auto& r = p_.resonators[i];
      const Scalar centre = Scalar(r.harmonic) * omega0;
      if (centre * dt_ >= std::numbers::pi_v<Scalar>)
        throw std::domain_error("PrController: resonator centre reached Nyquist");
      auto& c = cache_[i];
      if (centre != c.centre) {
        Eigen::Matrix<Scalar, 2, 2> a;
        a << -Scalar(2) * r.cutoff, -centre, centre, Scalar(0);
        c.maps = trapezoidal(a, Eigen::Matrix<Scalar, 2, 1>(Scalar(1), Scalar(0)),
                             prewarped_step(centre, dt_));
        c.centre = centre;
      }
      states_[i] = c.maps.phi * states_[i] + c.maps.gamma * (error + error_prev_).transpose();
      out += Scalar(2) * r.gain * r.cutoff * states_[i].row(0).transpose();
    }
    error_prev_ = error;
    return out;
  }

  Scalar step(Scalar error, Scalar omega0)
    requires(Channels == 1)
  {
    return step(Sample::Constant(error), omega0)(0);
  }

  void reset() {
    for (auto& s : states_) s.setZero();
    error_prev_.setZero();
  }

  const PrParams<Scalar>& params() const { return p_; }

 private:
  using State = Eigen::Matrix<Scalar, 2, Channels>;
  struct Cache {
    Scalar centre = Scalar(-1);
    TrapezoidalMaps<Scalar, 2, 1> maps{};
  };

  PrParams<Scalar> p_;
  Scalar dt_;
  std::vector<Cache> cache_;
  std::vector<State> states_;
  Sample error_prev_ = Sample::Zero();
};

}  // namespace mgsim
