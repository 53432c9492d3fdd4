#pragma once

#include "mgsim/plant/pv.hpp"

namespace mgsim {

struct DcStageParams {
  double boost_inductance = 3e-3;     // H
  double pv_capacitance = 470e-6;     // F
  double link_capacitance = 2350e-6;  // F
};

struct DcState {
  double v_pv = 0.0;
  double i_boost = 0.0;
  double v_dc = 0.0;
};

// Energy flows over one step, J. Each term uses the step-averaged quantities
// the trapezoidal rule integrates, so stored() + out == in to rounding.
struct DcEnergy {
  double pv_in = 0.0;
  double inverter_out = 0.0;
};

// Averaged lossless boost stage between the PV string and the inverter DC link:
//   Cpv dv_pv/dt = i_pv(v_pv) - i_b
//   Lb  di_b/dt  = v_pv - (1 - D) v_dc
//   Cdc dv_dc/dt = (1 - D) i_b - i_inv
// Advanced by the trapezoidal rule (Newton on the PV nonlinearity) with D and
// the inverter draw held over the step.
class DcStage {
 public:
  DcStage(const DcStageParams& params, const PvParams& pv);

  DcEnergy step(DcState& s, double duty, double i_inverter, double irradiance, double dt) const;
  double stored_energy(const DcState& s) const;

  const PvArray& pv() const { return pv_; }
  const DcStageParams& params() const { return p_; }

 private:
  DcStageParams p_;
  PvArray pv_;
};

}  // namespace mgsim
