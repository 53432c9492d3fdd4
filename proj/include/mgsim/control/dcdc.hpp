#pragma once

#include <string_view>
#include <vector>

namespace mgsim {

enum class DcdcMode { mppt, vr };

std::string_view to_string(DcdcMode mode);

struct DcdcParams {
  double v_ref = 600.0;          // V
  double vr_enter_margin = 5.0;  // MPPT -> VR above v_ref + margin
  double vr_exit_margin = 10.0;  // VR -> MPPT below v_ref - margin ...
  double vr_exit_hold = 0.1;     // ... sustained this long, s
  double mppt_period = 1e-3;     // s
  double mppt_step = 0.002;      // duty increment
  double mppt_deadband = 0.005;  // relative, on dI/dV + I/V
  double kp = 0.002;             // duty per volt
  double ki = 0.05;              // duty per volt-second
  double duty_min = 0.02;
  double duty_max = 0.95;
  double duty_initial = 0.36;
};

struct ModeTransition {
  double time;
  DcdcMode from;
  DcdcMode to;
};

// Boost duty controller: incremental-conductance MPPT on a decimated clock,
// or a PI on the DC-link voltage (VR mode) at every step. VR is entered when
// the link rises above its reference band and left only after the link has
// stayed below the lower threshold for the hold time.
class DcdcController {
 public:
  DcdcController(const DcdcParams& params, double dt);

  // One plant step at time t; returns the duty to apply.
  double step(double t, double v_pv, double i_pv, double v_dc);

  // Individual laws, exposed for testing. mppt_step is one MPPT tick.
  double mppt_step(double v_pv, double i_pv);
  double vr_step(double v_dc);
  DcdcMode select_mode(double t, double v_dc);

  double duty() const { return duty_; }
  DcdcMode mode() const { return mode_; }
  double vr_integral() const { return integral_; }
  bool duty_saturated() const { return saturated_; }
  const std::vector<ModeTransition>& transitions() const { return transitions_; }
  const DcdcParams& params() const { return p_; }

 private:
  double clamp_duty(double d);

  DcdcParams p_;
  double dt_;
  long mppt_every_;
  long tick_ = 0;
  DcdcMode mode_ = DcdcMode::mppt;
  double duty_;
  bool saturated_ = false;
  bool have_prev_ = false;
  double v_prev_ = 0.0, i_prev_ = 0.0;
  int last_direction_ = 1;
  double integral_ = 0.0;
  double below_since_ = -1.0;
  std::vector<ModeTransition> transitions_;
};

}  // namespace mgsim
