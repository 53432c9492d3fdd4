#include "mgsim/control/primary.hpp"

#include <algorithm>
#include <cmath>

namespace mgsim {

Ab virtual_impedance(const SequenceSet<Ab>& current, const VirtualImpedanceParams& p) {
  const Ab& ip = current.fundamental_pos;
  const double x = p.omega_f * p.l_pos;
  Ab v(p.r_pos * ip.alpha() - x * ip.beta(), p.r_pos * ip.beta() + x * ip.alpha());
  v += p.r_neg * current.fundamental_neg;
  for (std::size_t k = 0; k < kHarmonicOrders.size(); ++k) v += p.r_harmonic[k] * current.harmonic[k];
  return v;
}

Droop::Droop(const DroopParams& p, double dt, double theta0) : p_(p), dt_(dt), theta_(wrap_angle(theta0)) {
  if (!(p_.m_p > 0.0 && p_.n_p > 0.0)) throw ConfigError("droop: coefficients must be positive");
  if (!(p_.v_nominal > 0.0 && p_.omega_nominal > 0.0))
    throw ConfigError("droop: nominal voltage and frequency must be positive");
  if (!(dt > 0.0)) throw ConfigError("droop: dt must be positive");
}

Droop::Output Droop::step(double p_filtered, double q_filtered, double amplitude_scale,
                          double rating_scale) {
  Output out;
  out.omega = p_.omega_nominal - p_.m_p * p_filtered / rating_scale;
  const double raw = p_.v_nominal - p_.n_p * q_filtered;
  const double lo = p_.v_min_ratio * p_.v_nominal, hi = p_.v_max_ratio * p_.v_nominal;
  const double amplitude = std::clamp(raw, lo, hi);
  out.clamped = amplitude != raw;
  out.amplitude = amplitude * amplitude_scale;
  out.theta = theta_;
  theta_ = wrap_angle(theta_ + out.omega * dt_);
  return out;
}

PrimaryController::PrimaryController(const PrimaryParams& params, double dt)
    : p_(params),
      dt_(dt),
      power_filter_(params.power_filter_hz, dt),
      dc_filter_(params.dc_support.filter_hz, dt),
      droop_(params.droop, dt, params.theta0),
      bank_(params.sogi_gain, dt),
      voltage_loop_(params.voltage, dt, params.droop.omega_nominal),
      current_loop_(params.current, dt, params.droop.omega_nominal) {
  if (!(p_.rated_power > 0.0)) throw ConfigError("primary: rated power must be positive");
  if (!(p_.current_limit_ratio > 0.0)) throw ConfigError("primary: current limit must be positive");
  if (p_.soft_start < 0.0) throw ConfigError("primary: soft start must be non-negative");
  const auto& s = p_.dc_support;
  if (!(s.gain >= 0.0 && s.min_scale > 0.0 && s.min_scale <= 1.0))
    throw ConfigError("primary: dc support gain must be >= 0 and min scale in (0, 1]");
}

PrimaryOutput PrimaryController::step(const Measurements& m, const Ab& v_compensation) {
  PrimaryOutput out;
  const Ab v_o = clarke(m.v_o), i_l = clarke(m.i_l), i_o = clarke(m.i_o);

  const PowerPair pq = instantaneous_power(v_o, i_o);
  const Eigen::Vector2d filtered = power_filter_.step(Eigen::Vector2d(pq.p, pq.q));
  out.p_filtered = filtered(0);
  out.q_filtered = filtered(1);

  const double t = time();
  const double ramp = p_.soft_start > 0.0 ? std::min(1.0, t / p_.soft_start) : 1.0;

  if (steps_ == 0) dc_filter_.reset(Eigen::Matrix<double, 1, 1>(m.v_dc));
  const double v_dc = dc_filter_.step(m.v_dc);
  double support = 1.0;
  if (p_.dc_support.enabled && v_dc < p_.dc_support.threshold) {
    support = std::max(p_.dc_support.min_scale, 1.0 - p_.dc_support.gain * (p_.dc_support.threshold - v_dc));
    out.flags.dc_support = true;
  }
  out.dc_support_scale = support;
  out.droop = droop_.step(out.p_filtered, out.q_filtered, ramp * support, support);
  out.flags.voltage_clamped = out.droop.clamped;
  out.v_droop = out.droop.voltage();

  sequences_ = bank_.step(i_o, out.droop.omega);
  out.v_virtual = virtual_impedance(sequences_, p_.impedance);
  out.v_reference = compose_reference(out.v_droop, out.v_virtual, v_compensation);

  Ab i_ref(voltage_loop_.step(out.v_reference - v_o, out.droop.omega));
  const double limit = p_.current_limit_ratio * p_.rated_current();
  if (i_ref.norm() > limit) {
    i_ref = i_ref * (limit / i_ref.norm());
    out.flags.current_limited = true;
  }
  out.i_reference = i_ref;

  out.v_inverter = Ab(current_loop_.step(i_ref - i_l, out.droop.omega));
  if (m.v_dc > p_.dc_lockout) {
    out.modulation = inverse_clarke(out.v_inverter) / (0.5 * m.v_dc);
  } else {
    out.modulation.setZero();
    out.flags.dc_lockout = true;
  }
  ++steps_;
  return out;
}

}  // namespace mgsim
