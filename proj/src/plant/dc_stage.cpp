#include "mgsim/plant/dc_stage.hpp"

#include "mgsim/signals/types.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace mgsim {

DcStage::DcStage(const DcStageParams& params, const PvParams& pv) : p_(params), pv_(pv) {
  if (!(p_.boost_inductance > 0.0 && p_.pv_capacitance > 0.0 && p_.link_capacitance > 0.0))
    throw ConfigError("dc stage: inductance and capacitances must be positive");
}

DcEnergy DcStage::step(DcState& s, double duty, double i_inverter, double irradiance,
                       double dt) const {
  if (!(duty >= 0.0 && duty < 1.0)) throw std::invalid_argument("dc stage: duty outside [0, 1)");
  const double cpv = p_.pv_capacitance, lb = p_.boost_inductance, cdc = p_.link_capacitance;
  const double k = 1.0 - duty;
  const double h = 0.5 * dt;

  const Eigen::Vector3d x0(s.v_pv, s.i_boost, s.v_dc);
  const double ipv0 = pv_.current(x0(0), irradiance);
  auto rate = [&](const Eigen::Vector3d& x, double ipv) {
    return Eigen::Vector3d((ipv - x(1)) / cpv, (x(0) - k * x(2)) / lb, (k * x(1) - i_inverter) / cdc);
  };
  const Eigen::Vector3d f0 = rate(x0, ipv0);

  Eigen::Vector3d x = x0 + dt * f0;  // explicit predictor
  double ipv1 = pv_.current(x(0), irradiance);
  for (int it = 0; it < 20; ++it) {
    ipv1 = pv_.current(x(0), irradiance);
    const Eigen::Vector3d residual = x - x0 - h * (f0 + rate(x, ipv1));
    Eigen::Matrix3d jac;
    jac << pv_.slope(x(0), irradiance) / cpv, -1.0 / cpv, 0.0,
           1.0 / lb, 0.0, -k / lb,
           0.0, k / cdc, 0.0;
    const Eigen::Vector3d delta =
        (Eigen::Matrix3d::Identity() - h * jac).partialPivLu().solve(residual);
    x -= delta;
    if (delta.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + x.cwiseAbs().maxCoeff())) break;
  }
  ipv1 = pv_.current(x(0), irradiance);

  DcEnergy e;
  e.pv_in = dt * 0.5 * (x0(0) + x(0)) * 0.5 * (ipv0 + ipv1);
  e.inverter_out = dt * 0.5 * (x0(2) + x(2)) * i_inverter;
  s = {x(0), x(1), x(2)};
  return e;
}

double DcStage::stored_energy(const DcState& s) const {
  return 0.5 * (p_.pv_capacitance * s.v_pv * s.v_pv + p_.boost_inductance * s.i_boost * s.i_boost +
                p_.link_capacitance * s.v_dc * s.v_dc);
}

}  // namespace mgsim
