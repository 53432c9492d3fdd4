#include "mgsim/control/dcdc.hpp"

#include "mgsim/signals/types.hpp"

#include <algorithm>
#include <cmath>

namespace mgsim {

std::string_view to_string(DcdcMode mode) { return mode == DcdcMode::mppt ? "MPPT" : "VR"; }

DcdcController::DcdcController(const DcdcParams& params, double dt) : p_(params), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("dcdc: dt must be positive");
  if (!(p_.duty_min >= 0.0 && p_.duty_min < p_.duty_max && p_.duty_max < 1.0))
    throw ConfigError("dcdc: duty clamp must satisfy 0 <= min < max < 1");
  if (!(p_.mppt_step > 0.0)) throw ConfigError("dcdc: MPPT step must be positive");
  if (!(p_.vr_enter_margin >= 0.0 && p_.vr_exit_margin >= 0.0))
    throw ConfigError("dcdc: hysteresis margins must be non-negative");
  const double ratio = p_.mppt_period / dt;
  mppt_every_ = std::lround(ratio);
  if (mppt_every_ < 1 || std::abs(ratio - double(mppt_every_)) > 1e-9 * ratio)
    throw ConfigError("dcdc: dt must divide the MPPT period");
  duty_ = std::clamp(p_.duty_initial, p_.duty_min, p_.duty_max);
}

double DcdcController::clamp_duty(double d) {
  const double c = std::clamp(d, p_.duty_min, p_.duty_max);
  saturated_ = c != d;
  return c;
}

double DcdcController::mppt_step(double v, double i) {
  if (!have_prev_) {
    have_prev_ = true;
    v_prev_ = v;
    i_prev_ = i;
    return duty_;
  }
  const double dv = v - v_prev_, di = i - i_prev_;
  v_prev_ = v;
  i_prev_ = i;
  // +1: move the PV voltage up (lower duty), -1: move it down
  int direction = 0;
  if (i <= 0.0 || v <= 0.0) {
    direction = -1;  // at or beyond open circuit
  } else if (dv == 0.0) {
    if (di > 0.0) direction = 1;
    else if (di < 0.0) direction = -1;
    else direction = last_direction_;  // nothing moved: probe to get a slope
  } else {
    const double g = i / v;
    const double mismatch = di / dv + g;  // dP/dV / V
    if (std::abs(mismatch) > p_.mppt_deadband * g) direction = mismatch > 0.0 ? 1 : -1;
  }
  if (direction != 0) last_direction_ = direction;
  duty_ = clamp_duty(duty_ - direction * p_.mppt_step);
  return duty_;
}

double DcdcController::vr_step(double v_dc) {
  const double e = p_.v_ref - v_dc;
  const double candidate = integral_ + p_.ki * e * dt_;
  const double unclamped = p_.kp * e + candidate;
  duty_ = clamp_duty(unclamped);
  // integrate only while the output is inside the clamp, or when the error
  // pulls it back in
  if (!saturated_ || (unclamped > p_.duty_max && e < 0.0) || (unclamped < p_.duty_min && e > 0.0))
    integral_ = candidate;
  return duty_;
}

DcdcMode DcdcController::select_mode(double t, double v_dc) {
  const DcdcMode before = mode_;
  if (mode_ == DcdcMode::mppt) {
    if (v_dc > p_.v_ref + p_.vr_enter_margin) {
      mode_ = DcdcMode::vr;
      integral_ = duty_ - p_.kp * (p_.v_ref - v_dc);  // bumpless entry
      below_since_ = -1.0;
    }
  } else if (v_dc < p_.v_ref - p_.vr_exit_margin) {
    if (below_since_ < 0.0) below_since_ = t;
    if (t - below_since_ >= p_.vr_exit_hold - 1e-12) {
      mode_ = DcdcMode::mppt;
      have_prev_ = false;
      tick_ = 0;
    }
  } else {
    below_since_ = -1.0;
  }
  if (mode_ != before) transitions_.push_back({t, before, mode_});
  return mode_;
}

double DcdcController::step(double t, double v_pv, double i_pv, double v_dc) {
  if (select_mode(t, v_dc) == DcdcMode::vr) return vr_step(v_dc);
  if (tick_++ % mppt_every_ == 0) mppt_step(v_pv, i_pv);
  return duty_;
}

}  // namespace mgsim
