#include "mgsim/plant/pv.hpp"

#include "mgsim/signals/types.hpp"

#include <cmath>

namespace mgsim {

namespace {

// Voltage maximising v * (1 - (exp(v/a) - 1) / (exp(voc/a) - 1)) for a unit
// short-circuit current; Newton on dP/dv from the open-circuit side.
double unit_mpp_voltage(double voc, double a, double photo) {
  const double c = 1.0 / std::expm1(voc / a);
  double v = voc;
  for (int it = 0; it < 100; ++it) {
    const double e = std::exp(v / a);
    const double dp = photo - c * (e - 1.0) - c * e * v / a;
    const double ddp = -c * e * (2.0 / a + v / (a * a));
    const double next = v - dp / ddp;
    if (std::abs(next - v) < 1e-12 * voc) return next;
    v = next;
  }
  return v;
}

}  // namespace

PvArray::PvArray(const PvParams& params) : p_(params) {
  if (!(p_.rated_power > 0.0)) throw ConfigError("pv: rated power must be positive");
  if (!(p_.open_circuit_voltage > 0.0))
    throw ConfigError("pv: open-circuit voltage must be positive");
  if (!(p_.diode_voltage > 0.0)) throw ConfigError("pv: diode voltage must be positive");
  const double a = p_.diode_voltage, voc = p_.open_circuit_voltage;
  const double v = unit_mpp_voltage(voc, a, 1.0);
  const double unit_power = v * (1.0 - std::expm1(v / a) / std::expm1(voc / a));
  isc_ = p_.rated_power / unit_power;
  i0_ = isc_ / std::expm1(voc / a);
}

double PvArray::current(double v, double irradiance) const {
  const double i = irradiance * isc_ - i0_ * std::expm1(v / p_.diode_voltage);
  return i > 0.0 ? i : 0.0;
}

double PvArray::slope(double v, double irradiance) const {
  if (irradiance * isc_ - i0_ * std::expm1(v / p_.diode_voltage) <= 0.0) return 0.0;
  return -i0_ / p_.diode_voltage * std::exp(v / p_.diode_voltage);
}

double PvArray::open_circuit_voltage(double irradiance) const {
  if (irradiance <= 0.0) return 0.0;
  return p_.diode_voltage * std::log1p(irradiance * isc_ / i0_);
}

OperatingPoint PvArray::mpp(double irradiance) const {
  if (irradiance <= 0.0) return {0.0, 0.0};
  const double a = p_.diode_voltage;
  const double voc = open_circuit_voltage(irradiance);
  const double v = unit_mpp_voltage(voc, a, 1.0);
  return {v, current(v, irradiance)};
}

}  // namespace mgsim
