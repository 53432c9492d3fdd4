#pragma once

#include "mgsim/plant/network.hpp"
#include "mgsim/signals/filters.hpp"
#include "mgsim/signals/pll.hpp"
#include "mgsim/signals/transforms.hpp"

#include <array>
#include <deque>
#include <optional>

namespace mgsim {

// Signed components the central controller extracts, in SequenceSet order:
// +1, -1, then the tracked harmonics.
inline constexpr std::array<int, 2 + kHarmonicOrders.size()> kVccComponents{1, -1, 3, -5, 7, -11};

// Park at c * theta for every component, each followed by a second-order
// low-pass per axis. Before filtering, every component's raw dq value has the
// other components' latest filtered estimates (rotated into its frame)
// subtracted, so the 2 w, 4 w, ... beat between components does not reach
// the filters (decoupled multiple-reference-frame extraction).
class DqExtractionBank {
 public:
  using Set = SequenceSet<Dq<double>>;

  DqExtractionBank(double cutoff_hz, double damping, double dt, bool decoupled = true);

  const Set& step(const AlphaBeta<double>& v, double theta);
  const Set& output() const { return out_; }
  void reset();

 private:
  static constexpr std::size_t kCount = kVccComponents.size();
  std::array<Lpf2<double, 2>, kCount> filters_;
  std::array<Eigen::Vector2d, kCount> filtered_{};
  bool decoupled_;
  Set out_{};
};

// Distortion indices in percent; nullopt when the positive sequence is below
// the floor (index undefined).
std::optional<double> vuf(double neg_magnitude, double pos_magnitude, double floor = 1.0);
std::optional<double> hd(double harmonic_magnitude, double pos_magnitude, double floor = 1.0);

struct PiGains {
  double kp = 0.0;
  double ki = 0.0;
};

struct VccParams {
  double vuf_ref = 0.2;  // %
  double hd_ref = 0.2;   // %
  // fundamental negative, then +3, -5, +7, -11
  std::array<PiGains, 1 + kHarmonicOrders.size()> gains{
      PiGains{0.1, 1.5}, PiGains{0.2, 2.0}, PiGains{5.0, 30.0}, PiGains{5.0, 25.0}, PiGains{0.1, 1.0}};
  // Phase advance applied when a loop's command is rotated back, rad. It
  // cancels the phase of the path from the compensation reference to the
  // PCC at that component; without it a loop whose path lags by more than
  // about 90 deg pushes the index up instead of down.
  std::array<double, 1 + kHarmonicOrders.size()> phase_advance{0.0, 0.23, -0.46, 0.59, -1.87};
  std::array<double, kDgCount> rated_power{3000.0, 6000.0};  // W
  double period = 1e-3;         // s, PI update period
  double filter_hz = 5.0;
  double filter_damping = 2.5;
  double output_limit = 50.0;   // V per axis, per DG
  double pi_limit = 500.0;      // |PI output| bound
  double positive_floor = 1.0;  // V
  int delay_steps = 0;          // broadcast delay in plant steps
  PllParams<double> pll{};
};

struct VccFlags {
  bool output_clamped = false;
  bool positive_collapse = false;
};

struct VccOutput {
  std::array<AlphaBeta<double>, kDgCount> v_c;
  double theta = 0.0;
  double omega = 0.0;
  std::optional<double> vuf;
  std::array<std::optional<double>, kHarmonicOrders.size()> hd{};
  VccFlags flags;
};

// Central voltage compensation controller. Runs the PLL and the dq
// extraction every plant step, and the per-component PI loops on a slower
// clock. Each loop acts only while its index is above the reference: the
// error is limited to non-positive values and the PI output to [-limit, 0].
// The compensation of a component is the PI output times its dq vector,
// rotated back at c * theta; the sum is shared between the DGs in
// proportion to their rated power.
class Vcc {
 public:
  Vcc(const VccParams& params, double dt);

  VccOutput step(const ThreePhase<double>& v_pcc);

  void set_enabled(bool on);
  bool enabled() const { return enabled_; }

  const DqExtractionBank::Set& components() const { return bank_.output(); }
  // PI outputs of the last update (fundamental negative, then harmonics).
  const std::array<double, 1 + kHarmonicOrders.size()>& pi_outputs() const { return u_; }
  const std::array<double, 1 + kHarmonicOrders.size()>& integrals() const { return integral_; }
  const VccParams& params() const { return p_; }

  // Share of the total compensation sent to each DG.
  std::array<double, kDgCount> shares() const;

 private:
  static constexpr std::size_t kLoops = 1 + kHarmonicOrders.size();
  void update_pi(const std::optional<double>& vuf_now,
                 const std::array<std::optional<double>, kHarmonicOrders.size()>& hd_now);

  VccParams p_;
  double dt_;
  long every_;
  long tick_ = 0;
  bool enabled_ = false;
  SrfPll<double> pll_;
  DqExtractionBank bank_;
  std::array<double, kLoops> integral_{};
  std::array<double, kLoops> u_{};
  std::array<Dq<double>, kLoops> command_{};  // held between PI updates
  std::deque<std::array<AlphaBeta<double>, kDgCount>> pipeline_;
};

}  // namespace mgsim
