#pragma once

#include "mgsim/signals/types.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <vector>

namespace mgsim {

inline constexpr int kDgCount = 2;

struct LcFilterParams {
  double inductance = 1.8e-3;   // H
  double capacitance = 25e-6;   // F
};

struct FeederParams {
  double resistance = 0.2;      // ohm
  double inductance = 0.3e-3;   // H
};

struct NetworkParams {
  std::array<LcFilterParams, kDgCount> filter{};
  std::array<FeederParams, kDgCount> feeder{FeederParams{0.2, 0.3e-3}, FeederParams{0.1, 0.15e-3}};
};

// Harmonic current drawn by the nonlinear load, locked to the grid angle:
//   i_k = amplitude cos(|order| theta - sign(order) k 2pi/3 + phase),  k = 0, 1, 2
struct HarmonicSource {
  int order = 5;
  double amplitude = 0.0;  // A peak
  double phase = 0.0;      // rad
};

struct LoadStep {
  double time = 0.0;   // s
  double scale = 1.0;  // multiplies every load element from `time` on
};

struct LoadSpec {
  double balanced_resistance = 12.0;       // ohm per phase, star
  std::optional<double> phase_a_resistance; // ohm, phase a to load star
  std::vector<HarmonicSource> harmonics;
  std::optional<LoadStep> step;

  double scale_at(double t) const { return step && t >= step->time ? step->scale : 1.0; }
  // Per-phase conductance of the resistive part, S.
  ThreePhase<double> conductance(double t) const;
};

ThreePhase<double> harmonic_current(const LoadSpec& spec, double theta, double t);
ThreePhase<double> load_current(const ThreePhase<double>& v_pcc, const LoadSpec& spec, double theta,
                                double t);

// PCC node equation. The load bank has an ideal neutral that carries its own
// zero-sequence current i0, so the PCC voltage has no zero sequence:
//   G v + i_h = sum(i_f) - i0 1,   1'v = 0
ThreePhase<double> pcc_solve(const ThreePhase<double>& feeder_sum, const ThreePhase<double>& conductance,
                             const ThreePhase<double>& harmonic);

void validate(const LoadSpec& spec);

// Three-wire AC side of both DGs: per DG the LC filter (inductor current i_L,
// capacitor voltage v_o) and the feeder current i_f into the PCC. Neither the
// inverters nor the feeders carry zero-sequence current; the common-mode part
// of the inverter voltages is dropped. The model is linear and is advanced by
// the trapezoidal rule with matrices rebuilt only when the load changes.
class AcNetwork {
 public:
  static constexpr int kStates = 9 * kDgCount;
  static constexpr int kInputs = 3 * kDgCount + 3;
  using State = Eigen::Matrix<double, kStates, 1>;
  using Input = Eigen::Matrix<double, kInputs, 1>;
  using Inverters = std::array<ThreePhase<double>, kDgCount>;

  explicit AcNetwork(const NetworkParams& params);

  // Rebuild the step maps for a resistive load conductance and step size.
  void configure(const ThreePhase<double>& conductance, double dt);

  // Trapezoidal step with the inverter voltages held over the step and the
  // harmonic injection given at both ends.
  void step(State& x, const Inverters& v_inv, const ThreePhase<double>& harmonic_now,
            const ThreePhase<double>& harmonic_next) const;

  // Continuous-time derivative (used by the explicit solver).
  State derivative(const State& x, const Inverters& v_inv, const ThreePhase<double>& harmonic) const;

  ThreePhase<double> v_pcc(const State& x, const ThreePhase<double>& harmonic) const;
  double stored_energy(const State& x) const;

  static auto i_l(const State& x, int dg) { return x.segment<3>(9 * dg); }
  static auto v_o(const State& x, int dg) { return x.segment<3>(9 * dg + 3); }
  static auto i_f(const State& x, int dg) { return x.segment<3>(9 * dg + 6); }
  static auto i_l(State& x, int dg) { return x.segment<3>(9 * dg); }
  static auto v_o(State& x, int dg) { return x.segment<3>(9 * dg + 3); }
  static auto i_f(State& x, int dg) { return x.segment<3>(9 * dg + 6); }
  static ThreePhase<double> feeder_sum(const State& x);
  // PCC impedance matrix v = Z (sum(i_f) - i_h) for a conductance vector.
  static Eigen::Matrix3d pcc_impedance(const ThreePhase<double>& conductance);

  const NetworkParams& params() const { return p_; }
  const ThreePhase<double>& conductance() const { return g_; }
  double dt() const { return dt_; }

 private:
  using Square = Eigen::Matrix<double, kStates, kStates>;
  using InputMap = Eigen::Matrix<double, kStates, kInputs>;
  static Input pack(const Inverters& v_inv, const ThreePhase<double>& harmonic);

  NetworkParams p_;
  ThreePhase<double> g_ = ThreePhase<double>::Zero();
  double dt_ = 0.0;
  Square a_ = Square::Zero();
  InputMap b_ = InputMap::Zero();
  Square phi_ = Square::Zero();
  InputMap gamma_ = InputMap::Zero();
};

}  // namespace mgsim
