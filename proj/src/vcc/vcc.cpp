#include "mgsim/vcc/vcc.hpp"

#include <algorithm>
#include <cmath>

namespace mgsim {

namespace {

std::array<Lpf2<double, 2>, kVccComponents.size()> make_filters(double hz, double zeta, double dt) {
  const Lpf2<double, 2> f(hz, zeta, dt);
  std::array<Lpf2<double, 2>, kVccComponents.size()> out{f, f, f, f, f, f};
  return out;
}

}  // namespace

DqExtractionBank::DqExtractionBank(double cutoff_hz, double damping, double dt, bool decoupled)
    : filters_(make_filters(cutoff_hz, damping, dt)), decoupled_(decoupled) {
  for (auto& f : filtered_) f.setZero();
}

const DqExtractionBank::Set& DqExtractionBank::step(const AlphaBeta<double>& v, double theta) {
  std::array<Eigen::Vector2d, kCount> raw;
  for (std::size_t i = 0; i < kCount; ++i) {
    const int c = kVccComponents[i];
    raw[i] = park(v, c * theta);
    if (!decoupled_) continue;
    for (std::size_t j = 0; j < kCount; ++j) {
      if (j == i) continue;
      raw[i] -= rotate(Vector2<double>(filtered_[j]), (kVccComponents[j] - c) * theta);
    }
  }
  for (std::size_t i = 0; i < kCount; ++i) filtered_[i] = filters_[i].step(raw[i]);

  out_.fundamental_pos = Dq<double>(filtered_[0]);
  out_.fundamental_neg = Dq<double>(filtered_[1]);
  for (std::size_t k = 0; k < kHarmonicOrders.size(); ++k) out_.harmonic[k] = Dq<double>(filtered_[2 + k]);
  return out_;
}

void DqExtractionBank::reset() {
  for (auto& f : filters_) f.reset();
  for (auto& f : filtered_) f.setZero();
  out_ = Set{};
}

std::optional<double> vuf(double neg_magnitude, double pos_magnitude, double floor) {
  if (!(pos_magnitude > floor)) return std::nullopt;
  return 100.0 * neg_magnitude / pos_magnitude;
}

std::optional<double> hd(double harmonic_magnitude, double pos_magnitude, double floor) {
  return vuf(harmonic_magnitude, pos_magnitude, floor);
}

Vcc::Vcc(const VccParams& params, double dt)
    : p_(params),
      dt_(dt),
      pll_(params.pll, dt),
      bank_(params.filter_hz, params.filter_damping, dt) {
  if (!(p_.vuf_ref >= 0.0 && p_.hd_ref >= 0.0)) throw ConfigError("vcc: references must be non-negative");
  for (double p : p_.rated_power)
    if (!(p > 0.0)) throw ConfigError("vcc: rated powers must be positive");
  if (!(p_.output_limit > 0.0 && p_.pi_limit > 0.0)) throw ConfigError("vcc: limits must be positive");
  for (const auto& g : p_.gains)
    if (g.kp < 0.0 || g.ki < 0.0) throw ConfigError("vcc: PI gains must be non-negative");
  if (p_.delay_steps < 0) throw ConfigError("vcc: delay must be non-negative");
  const double ratio = p_.period / dt;
  every_ = std::lround(ratio);
  if (every_ < 1 || std::abs(ratio - double(every_)) > 1e-9 * ratio)
    throw ConfigError("vcc: dt must divide the VCC period");
}

std::array<double, kDgCount> Vcc::shares() const {
  double total = 0.0;
  for (double p : p_.rated_power) total += p;
  std::array<double, kDgCount> s{};
  for (int j = 0; j < kDgCount; ++j) s[j] = p_.rated_power[j] / total;
  return s;
}

void Vcc::set_enabled(bool on) {
  if (on == enabled_) return;
  enabled_ = on;
  integral_.fill(0.0);
  u_.fill(0.0);
  for (auto& c : command_) c.setZero();
}

void Vcc::update_pi(const std::optional<double>& vuf_now,
                    const std::array<std::optional<double>, kHarmonicOrders.size()>& hd_now) {
  const auto& set = bank_.output();
  for (std::size_t k = 0; k < kLoops; ++k) {
    const std::optional<double>& index = k == 0 ? vuf_now : hd_now[k - 1];
    const double ref = k == 0 ? p_.vuf_ref : p_.hd_ref;
    const Dq<double>& vec = k == 0 ? set.fundamental_neg : set.harmonic[k - 1];
    if (!index) continue;  // undefined index: hold the last command
    const PiGains& g = p_.gains[k];
    const double e = std::min(ref - *index, 0.0);
    if (g.ki > 0.0) {
      const double bound = p_.pi_limit / g.ki;
      integral_[k] = std::clamp(integral_[k] + e * p_.period, -bound, 0.0);
    }
    u_[k] = std::clamp(g.kp * e + g.ki * integral_[k], -p_.pi_limit, 0.0);
    command_[k] = Dq<double>(u_[k] * vec);
  }
}

VccOutput Vcc::step(const ThreePhase<double>& v_pcc) {
  VccOutput out;
  const AlphaBeta<double> v = clarke(v_pcc);
  const auto pll = pll_.step(v);
  out.theta = pll.theta;
  out.omega = pll.omega;
  const auto& set = bank_.step(v, pll.theta);

  const double pos = set.fundamental_pos.norm();
  out.vuf = vuf(set.fundamental_neg.norm(), pos, p_.positive_floor);
  for (std::size_t k = 0; k < kHarmonicOrders.size(); ++k)
    out.hd[k] = hd(set.harmonic[k].norm(), pos, p_.positive_floor);
  out.flags.positive_collapse = !out.vuf.has_value();

  if (enabled_ && tick_ % every_ == 0) update_pi(out.vuf, out.hd);
  ++tick_;

  AlphaBeta<double> total(0.0, 0.0);
  if (enabled_) {
    total += inverse_park(command_[0], -pll.theta + p_.phase_advance[0]);
    for (std::size_t k = 0; k < kHarmonicOrders.size(); ++k)
      total += inverse_park(command_[k + 1], kHarmonicOrders[k] * pll.theta + p_.phase_advance[k + 1]);
  }
  const auto share = shares();
  double largest = 0.0;
  for (int j = 0; j < kDgCount; ++j) largest = std::max(largest, share[j] * total.cwiseAbs().maxCoeff());
  if (largest > p_.output_limit) {
    total = AlphaBeta<double>(total * (p_.output_limit / largest));
    out.flags.output_clamped = true;
  }
  std::array<AlphaBeta<double>, kDgCount> now;
  for (int j = 0; j < kDgCount; ++j) now[j] = AlphaBeta<double>(share[j] * total);

  pipeline_.push_back(now);
  if (int(pipeline_.size()) > p_.delay_steps) {
    out.v_c = pipeline_.front();
    pipeline_.pop_front();
  }
  return out;
}

}  // namespace mgsim
