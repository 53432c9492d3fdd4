#include "mgsim/plant/plant.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mgsim {

BridgeOutput inverter_output(const ThreePhase<double>& modulation, double v_dc) {
  BridgeOutput out;
  const ThreePhase<double> m = modulation.cwiseMax(-1.0).cwiseMin(1.0);
  out.saturated = (m.array() != modulation.array()).any();
  out.voltage = m * (0.5 * v_dc);
  return out;
}

Plant::Plant(const PlantParams& params, double dt, const std::array<DcState, kDgCount>& dc0,
             double theta0)
    : p_(params),
      dt_(dt),
      network_(params.network),
      stages_{DcStage(params.dc[0], params.pv[0]), DcStage(params.dc[1], params.pv[1])},
      dc_(dc0),
      theta_(theta0) {
  validate(p_.load);
  for (const auto& s : dc_)
    if (!(s.v_dc > 0.0)) throw ConfigError("plant: initial DC-link voltage must be positive");
  network_.configure(p_.load.conductance(0.0), dt);
  harmonic_ = harmonic_current(p_.load, theta_, 0.0);
  audit_.stored_initial = audit_.stored_now = stored_energy();
}

double Plant::stored_energy() const {
  double e = network_.stored_energy(ac_);
  for (int j = 0; j < kDgCount; ++j) e += stages_[j].stored_energy(dc_[j]);
  return e;
}

double Plant::kcl_residual() const {
  const ThreePhase<double> v = v_pcc();
  const ThreePhase<double> load = network_.conductance().cwiseProduct(v) + harmonic_;
  const ThreePhase<double> supplied = load - ThreePhase<double>::Constant(load.mean());
  return (AcNetwork::feeder_sum(ac_) - supplied).cwiseAbs().maxCoeff();
}

void Plant::step(const PlantControls& controls, double theta_next,
                 const std::array<double, kDgCount>& irradiance) {
  irradiance_ = irradiance;
  const ThreePhase<double> g = p_.load.conductance(t_);
  if (g != network_.conductance()) network_.configure(g, dt_);

  if (p_.method == SolverMethod::trapezoidal) {
    step_trapezoidal(controls, irradiance, harmonic_current(p_.load, theta_next, t_ + dt_));
  } else {
    step_rk4(controls, irradiance, theta_next);
  }
  ++steps_;
  t_ = double(steps_) * dt_;
  theta_ = theta_next;
  harmonic_ = harmonic_current(p_.load, theta_, t_);
  audit_.stored_now = stored_energy();
  check_finite();
}

void Plant::step_trapezoidal(const PlantControls& c, const std::array<double, kDgCount>& irradiance,
                             const ThreePhase<double>& harmonic_next) {
  AcNetwork::Inverters v_inv;
  std::array<ThreePhase<double>, kDgCount> m;
  for (int j = 0; j < kDgCount; ++j) {
    const BridgeOutput b = inverter_output(c.modulation[j], dc_[j].v_dc);
    v_inv[j] = b.voltage;
    saturated_[j] = b.saturated;
    m[j] = b.voltage / (0.5 * dc_[j].v_dc);
  }

  // bridge voltage at mid-step, extrapolated from the last two samples
  const AcNetwork::Inverters v_now = v_inv;
  if (v_prev_)
    for (int j = 0; j < kDgCount; ++j) {
      v_inv[j] = 1.5 * v_now[j] - 0.5 * (*v_prev_)[j];
      m[j] = v_inv[j] / (0.5 * dc_[j].v_dc);
    }
  v_prev_ = v_now;

  const AcNetwork::State old = ac_;
  network_.step(ac_, v_inv, harmonic_, harmonic_next);
  const AcNetwork::State mid = 0.5 * (old + ac_);
  const ThreePhase<double> harmonic_mid = 0.5 * (harmonic_ + harmonic_next);
  const ThreePhase<double> feeders = AcNetwork::feeder_sum(mid);
  audit_.load += dt_ * pcc_solve(feeders, network_.conductance(), harmonic_mid).dot(feeders);

  for (int j = 0; j < kDgCount; ++j) {
    const ThreePhase<double> il = AcNetwork::i_l(mid, j);
    audit_.inverter_to_ac += dt_ * v_inv[j].dot(il);
    audit_.feeder_loss += dt_ * p_.network.feeder[j].resistance * AcNetwork::i_f(mid, j).squaredNorm();
    const double i_inv = 0.5 * m[j].dot(il);
    const DcEnergy e = stages_[j].step(dc_[j], c.duty[j], i_inv, irradiance[j], dt_);
    audit_.pv_in += e.pv_in;
    audit_.dc_to_inverter += e.inverter_out;
  }
}

// Classical RK4 on the whole plant with controls held; the DC-link voltage
// feeds the bridge continuously and the harmonic angle is interpolated.
void Plant::step_rk4(const PlantControls& c, const std::array<double, kDgCount>& irradiance,
                     double theta_next) {
  constexpr int n_ac = AcNetwork::kStates;
  using Full = Eigen::Matrix<double, n_ac + 3 * kDgCount, 1>;
  std::array<ThreePhase<double>, kDgCount> m;
  for (int j = 0; j < kDgCount; ++j) {
    m[j] = c.modulation[j].cwiseMax(-1.0).cwiseMin(1.0);
    saturated_[j] = (m[j].array() != c.modulation[j].array()).any();
    if (!(c.duty[j] >= 0.0 && c.duty[j] < 1.0))
      throw std::invalid_argument("dc stage: duty outside [0, 1)");
  }
  double dtheta = std::remainder(theta_next - theta_, kTwoPi<double>);
  const double t0 = t_;

  struct Flows {
    double pv = 0, dc_out = 0, ac_in = 0, load = 0, loss = 0;
  };
  auto eval = [&](const Full& x, double s, Flows* flows) {
    const ThreePhase<double> h = harmonic_current(p_.load, theta_ + s * dtheta, t0 + s * dt_);
    const AcNetwork::State ac = x.head<n_ac>();
    AcNetwork::Inverters v_inv;
    Full dx;
    for (int j = 0; j < kDgCount; ++j) {
      const int o = n_ac + 3 * j;
      const double v_pv = x(o), i_b = x(o + 1), v_dc = x(o + 2);
      const auto& st = stages_[j];
      const double k = 1.0 - c.duty[j];
      const double ipv = st.pv().current(v_pv, irradiance[j]);
      v_inv[j] = m[j] * (0.5 * v_dc);
      const double i_inv = 0.5 * m[j].dot(AcNetwork::i_l(ac, j));
      dx(o) = (ipv - i_b) / st.params().pv_capacitance;
      dx(o + 1) = (v_pv - k * v_dc) / st.params().boost_inductance;
      dx(o + 2) = (k * i_b - i_inv) / st.params().link_capacitance;
      if (flows) {
        flows->pv += v_pv * ipv;
        flows->dc_out += v_dc * i_inv;
        flows->ac_in += v_inv[j].dot(AcNetwork::i_l(ac, j));
        flows->loss += p_.network.feeder[j].resistance * AcNetwork::i_f(ac, j).squaredNorm();
      }
    }
    dx.head<n_ac>() = network_.derivative(ac, v_inv, h);
    if (flows) {
      const ThreePhase<double> feeders = AcNetwork::feeder_sum(ac);
      flows->load += network_.v_pcc(ac, h).dot(feeders);
    }
    return dx;
  };

  Full x;
  x.head<n_ac>() = ac_;
  for (int j = 0; j < kDgCount; ++j)
    x.segment<3>(n_ac + 3 * j) = Eigen::Vector3d(dc_[j].v_pv, dc_[j].i_boost, dc_[j].v_dc);

  Flows f0, f1;
  const Full k1 = eval(x, 0.0, &f0);
  const Full k2 = eval(x + 0.5 * dt_ * k1, 0.5, nullptr);
  const Full k3 = eval(x + 0.5 * dt_ * k2, 0.5, nullptr);
  const Full k4 = eval(x + dt_ * k3, 1.0, nullptr);
  x += dt_ / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  eval(x, 1.0, &f1);

  ac_ = x.head<n_ac>();
  for (int j = 0; j < kDgCount; ++j)
    dc_[j] = {x(n_ac + 3 * j), x(n_ac + 3 * j + 1), x(n_ac + 3 * j + 2)};
  audit_.pv_in += 0.5 * dt_ * (f0.pv + f1.pv);
  audit_.dc_to_inverter += 0.5 * dt_ * (f0.dc_out + f1.dc_out);
  audit_.inverter_to_ac += 0.5 * dt_ * (f0.ac_in + f1.ac_in);
  audit_.load += 0.5 * dt_ * (f0.load + f1.load);
  audit_.feeder_loss += 0.5 * dt_ * (f0.loss + f1.loss);
}

void Plant::check_finite() const {
  constexpr double limit = 1e6;
  bool ok = ac_.allFinite() && ac_.cwiseAbs().maxCoeff() < limit;
  for (const auto& s : dc_)
    ok = ok && std::isfinite(s.v_pv) && std::isfinite(s.i_boost) && std::isfinite(s.v_dc) &&
         std::abs(s.v_dc) < limit && std::abs(s.i_boost) < limit && std::abs(s.v_pv) < limit;
  if (!ok)
    throw DivergenceError("plant state diverged at t = " + std::to_string(t_) + " s",
                          t_ - dt_);
}

}  // namespace mgsim
