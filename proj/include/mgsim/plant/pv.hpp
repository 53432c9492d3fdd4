#pragma once

namespace mgsim {

struct PvParams {
  double rated_power = 3000.0;  // W at irradiance 1
  double open_circuit_voltage = 444.0;
  // Modified ideality voltage n * Ns * kT/q of the whole string, V.
  double diode_voltage = 22.0;
};

struct OperatingPoint {
  double voltage;
  double current;
  double power() const { return voltage * current; }
};

// Single-diode string without series/shunt resistance:
//   i = G isc - i0 (exp(v/a) - 1),  i0 = isc / (exp(voc/a) - 1)
// isc is chosen so the maximum power at G = 1 equals the rated power.
// Above the open-circuit voltage of the given irradiance the current is
// clamped to zero (no reverse conduction).
class PvArray {
 public:
  explicit PvArray(const PvParams& params);

  double current(double v, double irradiance = 1.0) const;
  // d current / d v, consistent with the clamp.
  double slope(double v, double irradiance = 1.0) const;
  OperatingPoint mpp(double irradiance = 1.0) const;

  double short_circuit_current() const { return isc_; }
  double open_circuit_voltage(double irradiance = 1.0) const;
  const PvParams& params() const { return p_; }

 private:
  PvParams p_;
  double isc_ = 0.0;
  double i0_ = 0.0;
};

}  // namespace mgsim
