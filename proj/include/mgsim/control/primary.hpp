#pragma once

#include "mgsim/signals/filters.hpp"
#include "mgsim/signals/pr.hpp"
#include "mgsim/signals/sogi.hpp"
#include "mgsim/signals/transforms.hpp"

#include <array>

namespace mgsim {

using Ab = AlphaBeta<double>;

struct DroopParams {
  double m_p = 12e-4;                         // (rad/s)/W
  double n_p = 1e-3;                          // V/var
  double v_nominal = 120.0 * std::numbers::sqrt2;  // V amplitude
  double omega_nominal = 370.0;               // rad/s
  double v_min_ratio = 0.5;
  double v_max_ratio = 1.2;
};

struct VirtualImpedanceParams {
  double r_pos = 0.3;     // ohm
  double l_pos = 0.5e-3;  // H
  double r_neg = 0.4;     // ohm
  std::array<double, kHarmonicOrders.size()> r_harmonic{3.0, 1.0, 1.0, 0.5};  // +3 -5 +7 -11
  double omega_f = 370.0;  // rad/s
};

// Without storage a DG whose load exceeds its PV power drains its link.
// Below `threshold` the DG is derated in proportion to the (filtered)
// shortfall: the droop amplitude is scaled, which lowers the resistive
// demand, and the frequency droop acts as if the rating were scaled too,
// which moves load to the other DG. Inactive whenever the link is held at
// its reference.
struct DcSupportParams {
  bool enabled = true;
  double threshold = 580.0;  // V
  double gain = 1e-3;        // amplitude fraction per volt below threshold
  double min_scale = 0.7;
  double filter_hz = 10.0;
};

struct PrimaryParams {
  double rated_power = 3000.0;  // W
  DroopParams droop;
  VirtualImpedanceParams impedance;
  PrParams<double> voltage{0.05, {{1, 50.0, 2.0}, {3, 20.0, 2.0}, {5, 20.0, 2.0}, {7, 20.0, 2.0}}};
  PrParams<double> current{7.0, {{1, 200.0, 2.0}, {3, 200.0, 2.0}, {5, 200.0, 2.0}, {7, 200.0, 2.0}}};
  double power_filter_hz = 2.0;
  double sogi_gain = std::numbers::sqrt2;
  double current_limit_ratio = 1.5;  // x rated current amplitude
  double dc_lockout = 50.0;          // V
  double soft_start = 0.1;           // s, amplitude ramp
  DcSupportParams dc_support;
  double theta0 = 0.0;

  // Peak phase current at rated power and nominal voltage.
  double rated_current() const { return rated_power / (1.5 * droop.v_nominal); }
};

// Instantaneous power of amplitude-invariant alpha-beta quantities.
struct PowerPair {
  double p;
  double q;
};
inline PowerPair instantaneous_power(const Ab& v, const Ab& i) {
  return {instantaneous_active_power(v, i), instantaneous_reactive_power(v, i)};
}

// Per-axis virtual impedance drop:
//   positive sequence  R i + w_f L J i   (J rotates by +90 deg)
//   negative sequence  R- i-
//   harmonic h         R_h i_h
Ab virtual_impedance(const SequenceSet<Ab>& current, const VirtualImpedanceParams& p);

// V* = v_droop - v_vr + V_c
template <typename A, typename B, typename C>
auto compose_reference(const Eigen::MatrixBase<A>& v_droop, const Eigen::MatrixBase<B>& v_vr,
                       const Eigen::MatrixBase<C>& v_c) {
  return (v_droop - v_vr + v_c).eval();
}

// Frequency and amplitude droop with its phase accumulator.
class Droop {
 public:
  struct Output {
    double omega;      // rad/s
    double amplitude;  // V, after clamp
    double theta;      // rad, angle of this sample
    bool clamped;
    Ab voltage() const { return Ab(amplitude * std::cos(theta), amplitude * std::sin(theta)); }
  };

  Droop(const DroopParams& p, double dt, double theta0 = 0.0);
  // P is divided by rating_scale before the frequency droop.
  Output step(double p_filtered, double q_filtered, double amplitude_scale = 1.0,
              double rating_scale = 1.0);
  double theta() const { return theta_; }
  const DroopParams& params() const { return p_; }

 private:
  DroopParams p_;
  double dt_;
  double theta_;
};

struct Measurements {
  ThreePhase<double> v_o;
  ThreePhase<double> i_l;
  ThreePhase<double> i_o;
  double v_dc = 0.0;
};

struct PrimaryFlags {
  bool voltage_clamped = false;
  bool current_limited = false;
  bool dc_lockout = false;
  bool dc_support = false;  // amplitude derated for a low link
};

struct PrimaryOutput {
  ThreePhase<double> modulation;
  double p_filtered = 0.0;
  double q_filtered = 0.0;
  double dc_support_scale = 1.0;
  Droop::Output droop{};
  Ab v_droop;
  Ab v_virtual;
  Ab v_reference;
  Ab i_reference;
  Ab v_inverter;
  PrimaryFlags flags;
};

// Primary control stack of one DG, advanced once per plant step: power
// calculation and 2 Hz filtering, droop, SOGI sequence extraction of the
// output current with virtual impedance, then the PR voltage and current
// loops in alpha-beta, normalised by the DC-link voltage into modulation.
class PrimaryController {
 public:
  PrimaryController(const PrimaryParams& params, double dt);

  PrimaryOutput step(const Measurements& m, const Ab& v_compensation);

  double time() const { return double(steps_) * dt_; }
  const PrimaryParams& params() const { return p_; }
  const SequenceSet<Ab>& current_sequences() const { return sequences_; }

 private:
  PrimaryParams p_;
  double dt_;
  std::uint64_t steps_ = 0;
  Lpf1<double, 2> power_filter_;
  Lpf1<double> dc_filter_;
  Droop droop_;
  SogiBank<double> bank_;
  PrController<double, 2> voltage_loop_;
  PrController<double, 2> current_loop_;
  SequenceSet<Ab> sequences_{};
};

}  // namespace mgsim
