#include "mgsim/plant/network.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <string>

namespace mgsim {

namespace {

constexpr double kThird = 2.0 * std::numbers::pi / 3.0;

const Eigen::Matrix3d& common_mode_free() {
  static const Eigen::Matrix3d p0 =
      Eigen::Matrix3d::Identity() - Eigen::Matrix3d::Constant(1.0 / 3.0);
  return p0;
}

}  // namespace

ThreePhase<double> LoadSpec::conductance(double t) const {
  const double s = scale_at(t);
  ThreePhase<double> g = ThreePhase<double>::Constant(s / balanced_resistance);
  if (phase_a_resistance) g(0) += s / *phase_a_resistance;
  return g;
}

void validate(const LoadSpec& spec) {
  if (!(spec.balanced_resistance > 0.0) || !std::isfinite(spec.balanced_resistance))
    throw ConfigError("load: balanced resistance must be positive (PCC node would float)");
  if (spec.phase_a_resistance && !(*spec.phase_a_resistance > 0.0))
    throw ConfigError("load: phase-a resistance must be positive");
  for (const auto& h : spec.harmonics) {
    if (h.order == 0 || h.order == 1 || h.order == -1)
      throw ConfigError("load: harmonic order " + std::to_string(h.order) + " is not a harmonic");
    if (h.amplitude < 0.0) throw ConfigError("load: harmonic amplitude must be non-negative");
    if (std::abs(h.order) % 3 == 0 && h.order < 0)
      throw ConfigError("load: triplen orders must be positive-sequence in a three-wire network");
  }
  if (spec.step && !(spec.step->scale > 0.0))
    throw ConfigError("load: step scale must be positive");
}

ThreePhase<double> harmonic_current(const LoadSpec& spec, double theta, double t) {
  ThreePhase<double> i = ThreePhase<double>::Zero();
  const double s = spec.scale_at(t);
  for (const auto& h : spec.harmonics) {
    const double sign = h.order > 0 ? 1.0 : -1.0;
    const double base = std::abs(h.order) * theta + h.phase;
    for (int k = 0; k < 3; ++k) i(k) += s * h.amplitude * std::cos(base - sign * k * kThird);
  }
  return i;
}

ThreePhase<double> load_current(const ThreePhase<double>& v_pcc, const LoadSpec& spec, double theta,
                                double t) {
  return spec.conductance(t).cwiseProduct(v_pcc) + harmonic_current(spec, theta, t);
}

ThreePhase<double> pcc_solve(const ThreePhase<double>& feeder_sum, const ThreePhase<double>& conductance,
                             const ThreePhase<double>& harmonic) {
  return AcNetwork::pcc_impedance(conductance) * (feeder_sum - harmonic);
}

Eigen::Matrix3d AcNetwork::pcc_impedance(const ThreePhase<double>& conductance) {
  if (!(conductance.minCoeff() > 0.0)) throw ConfigError("pcc: node has no resistive path");
  const ThreePhase<double> r = conductance.cwiseInverse();
  return Eigen::Matrix3d(r.asDiagonal()) - r * r.transpose() / r.sum();
}

AcNetwork::AcNetwork(const NetworkParams& params) : p_(params) {
  for (int j = 0; j < kDgCount; ++j) {
    const auto& f = p_.filter[j];
    const auto& d = p_.feeder[j];
    if (!(f.inductance > 0.0 && f.capacitance > 0.0))
      throw ConfigError("network: filter L and C must be positive");
    if (!(d.inductance > 0.0 && d.resistance >= 0.0))
      throw ConfigError("network: feeder inductance must be positive, resistance non-negative");
  }
}

ThreePhase<double> AcNetwork::feeder_sum(const State& x) {
  ThreePhase<double> s = ThreePhase<double>::Zero();
  for (int j = 0; j < kDgCount; ++j) s += i_f(x, j);
  return s;
}

AcNetwork::Input AcNetwork::pack(const Inverters& v_inv, const ThreePhase<double>& harmonic) {
  Input u;
  for (int j = 0; j < kDgCount; ++j) u.segment<3>(3 * j) = v_inv[j];
  u.segment<3>(3 * kDgCount) = harmonic;
  return u;
}

void AcNetwork::configure(const ThreePhase<double>& conductance, double dt) {
  if (!(conductance.minCoeff() > 0.0)) throw ConfigError("pcc: node has no resistive path");
  if (!(dt > 0.0)) throw ConfigError("network: dt must be positive");
  for (const auto& f : p_.filter) {
    const double f_res = 1.0 / (2.0 * std::numbers::pi * std::sqrt(f.inductance * f.capacitance));
    if (dt > 1.0 / (20.0 * f_res))
      throw ConfigError("network: dt is too coarse for the LC resonance (" + std::to_string(f_res) +
                        " Hz); need dt <= " + std::to_string(1.0 / (20.0 * f_res)));
  }
  g_ = conductance;
  dt_ = dt;

  const Eigen::Matrix3d& p0 = common_mode_free();
  const Eigen::Matrix3d z = pcc_impedance(conductance);
  a_.setZero();
  b_.setZero();
  for (int j = 0; j < kDgCount; ++j) {
    const int il = 9 * j, vo = il + 3, fi = il + 6;
    const double lf = p_.filter[j].inductance, cf = p_.filter[j].capacitance;
    const double lg = p_.feeder[j].inductance, rg = p_.feeder[j].resistance;
    a_.block<3, 3>(il, vo) = -p0 / lf;
    b_.block<3, 3>(il, 3 * j) = p0 / lf;
    a_.block<3, 3>(vo, il) = Eigen::Matrix3d::Identity() / cf;
    a_.block<3, 3>(vo, fi) = -Eigen::Matrix3d::Identity() / cf;
    a_.block<3, 3>(fi, vo) = p0 / lg;
    a_.block<3, 3>(fi, fi) = -p0 * rg / lg;
    for (int m = 0; m < kDgCount; ++m) a_.block<3, 3>(fi, 9 * m + 6) -= p0 * z / lg;
    b_.block<3, 3>(fi, 3 * kDgCount) = p0 * z / lg;
  }

  const Square identity = Square::Identity();
  const Square lhs_inv = (identity - 0.5 * dt * a_).partialPivLu().inverse();
  phi_ = lhs_inv * (identity + 0.5 * dt * a_);
  gamma_ = lhs_inv * b_ * (0.5 * dt);
}

void AcNetwork::step(State& x, const Inverters& v_inv, const ThreePhase<double>& harmonic_now,
                     const ThreePhase<double>& harmonic_next) const {
  const Input held = pack(v_inv, harmonic_now);
  Input sum = 2.0 * held;
  sum.segment<3>(3 * kDgCount) = harmonic_now + harmonic_next;
  x = phi_ * x + gamma_ * sum;
}

AcNetwork::State AcNetwork::derivative(const State& x, const Inverters& v_inv,
                                       const ThreePhase<double>& harmonic) const {
  return a_ * x + b_ * pack(v_inv, harmonic);
}

ThreePhase<double> AcNetwork::v_pcc(const State& x, const ThreePhase<double>& harmonic) const {
  return pcc_solve(feeder_sum(x), g_, harmonic);
}

double AcNetwork::stored_energy(const State& x) const {
  double e = 0.0;
  for (int j = 0; j < kDgCount; ++j) {
    e += 0.5 * p_.filter[j].inductance * i_l(x, j).squaredNorm();
    e += 0.5 * p_.filter[j].capacitance * v_o(x, j).squaredNorm();
    e += 0.5 * p_.feeder[j].inductance * i_f(x, j).squaredNorm();
  }
  return e;
}

}  // namespace mgsim
