#pragma once

#include "mgsim/plant/dc_stage.hpp"
#include "mgsim/plant/network.hpp"

#include <array>
#include <optional>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mgsim {

enum class SolverMethod { trapezoidal, rk4 };

struct BridgeOutput {
  ThreePhase<double> voltage;
  bool saturated = false;
};

// Averaged bridge: each leg produces m v_dc / 2, with |m| clamped to 1.
BridgeOutput inverter_output(const ThreePhase<double>& modulation, double v_dc);

struct PlantParams {
  NetworkParams network;
  std::array<DcStageParams, kDgCount> dc{};
  std::array<PvParams, kDgCount> pv{PvParams{3000.0}, PvParams{6000.0}};
  LoadSpec load;
  SolverMethod method = SolverMethod::trapezoidal;
};

struct PlantControls {
  std::array<double, kDgCount> duty{};
  std::array<ThreePhase<double>, kDgCount> modulation{ThreePhase<double>::Zero(),
                                                      ThreePhase<double>::Zero()};
};

// Cumulative energy bookkeeping since construction, J.
struct EnergyAudit {
  double pv_in = 0.0;
  double dc_to_inverter = 0.0;  // v_dc i_inv on the DC side
  double inverter_to_ac = 0.0;  // v_inv . i_L on the AC side
  double load = 0.0;
  double feeder_loss = 0.0;
  double stored_initial = 0.0;
  double stored_now = 0.0;

  // Source energy not accounted for by storage, delivery and losses.
  double residual() const { return pv_in - (stored_now - stored_initial) - load - feeder_loss; }
  double relative_error() const { return pv_in > 0.0 ? std::abs(residual()) / pv_in : 0.0; }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_good_time)
      : std::runtime_error(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

// Both DGs' DC stages, inverters and the shared AC network. One step runs
// PCC solve -> AC stage -> DC stages in that order. The harmonic load is
// locked to an externally supplied grid angle (the central PLL's).
class Plant {
 public:
  Plant(const PlantParams& params, double dt, const std::array<DcState, kDgCount>& dc0,
        double theta0 = 0.0);

  void step(const PlantControls& controls, double theta_next,
            const std::array<double, kDgCount>& irradiance = {1.0, 1.0});

  double time() const { return t_; }
  std::uint64_t steps() const { return steps_; }
  double dt() const { return dt_; }

  ThreePhase<double> v_o(int dg) const { return AcNetwork::v_o(ac_, dg); }
  ThreePhase<double> i_l(int dg) const { return AcNetwork::i_l(ac_, dg); }
  ThreePhase<double> i_o(int dg) const { return AcNetwork::i_f(ac_, dg); }
  ThreePhase<double> v_pcc() const { return network_.v_pcc(ac_, harmonic_); }
  ThreePhase<double> load_current() const { return AcNetwork::feeder_sum(ac_); }
  const DcState& dc(int dg) const { return dc_[dg]; }
  double pv_current(int dg) const { return stages_[dg].pv().current(dc_[dg].v_pv, irradiance_[dg]); }
  double pv_available(int dg) const { return stages_[dg].pv().mpp(irradiance_[dg]).power(); }
  bool bridge_saturated(int dg) const { return saturated_[dg]; }

  // Largest KCL mismatch at the PCC: feeder currents against the load current
  // less the zero sequence returned by the load-bank neutral.
  double kcl_residual() const;

  const EnergyAudit& audit() const { return audit_; }
  const PlantParams& params() const { return p_; }
  const DcStage& stage(int dg) const { return stages_[dg]; }
  const AcNetwork& network() const { return network_; }
  const AcNetwork::State& ac_state() const { return ac_; }

 private:
  double stored_energy() const;
  void step_trapezoidal(const PlantControls& c, const std::array<double, kDgCount>& irradiance,
                        const ThreePhase<double>& harmonic_next);
  void step_rk4(const PlantControls& c, const std::array<double, kDgCount>& irradiance, double theta_next);
  void check_finite() const;

  PlantParams p_;
  double dt_;
  AcNetwork network_;
  std::array<DcStage, kDgCount> stages_;
  AcNetwork::State ac_ = AcNetwork::State::Zero();
  std::array<DcState, kDgCount> dc_;
  std::array<double, kDgCount> irradiance_{1.0, 1.0};
  std::array<bool, kDgCount> saturated_{};
  std::optional<AcNetwork::Inverters> v_prev_;
  double t_ = 0.0;
  double theta_;
  std::uint64_t steps_ = 0;
  ThreePhase<double> harmonic_;
  EnergyAudit audit_;
};

}  // namespace mgsim
