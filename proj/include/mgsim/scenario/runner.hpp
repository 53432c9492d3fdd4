#pragma once

#include "mgsim/analysis.hpp"
#include "mgsim/scenario/config.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mgsim {

std::string channel_unit(const std::string& name);

// One raised flag, merged over gaps shorter than a fundamental cycle.
struct FlagInterval {
  std::string flag;
  int dg = -1;  // -1 for the central controller
  double start = 0.0;
  double end = 0.0;
};

struct ModeChange {
  int dg = 0;
  ModeTransition transition;
  // Time from the transition until v_dc enters and stays inside +-2% of its
  // reference (for entries into VR); nullopt if it never does.
  std::optional<double> settle_time;
};

// PCC voltage quality over one integer-cycle window.
struct PowerQuality {
  double t_end = 0.0;
  double f1 = 0.0;                  // Hz
  std::array<double, 3> thd{};      // % per phase
  double thd_max = 0.0;
  std::array<double, 4> hd{};       // % for orders 3, 5, 7, 11, worst phase
  double vuf = 0.0;                 // %
  double fundamental = 0.0;         // V, mean phase magnitude
};

struct DgMetrics {
  double p = 0.0, q = 0.0;          // filtered total power, window mean
  double p_pos = 0.0, q_pos = 0.0;  // fundamental positive-sequence power
  double omega = 0.0;
  double v_dc_mean = 0.0, v_dc_min = 0.0, v_dc_max = 0.0;
  double p_pv = 0.0, p_available = 0.0;
  double curtailment = 0.0;         // % of available PV energy not drawn
};

struct MetricsReport {
  Window window{};                  // averaging window
  bool steady = false;
  std::optional<Window> steady_window;
  std::string steady_note;

  PowerQuality final_quality;
  std::optional<PowerQuality> pre_compensation;
  std::optional<double> thd_reduction;  // % relative, when the VCC toggles on
  std::optional<double> vuf_online;
  std::array<std::optional<double>, 4> hd_online{};

  std::array<DgMetrics, kDgCount> dg{};
  std::optional<double> p_ratio, q_ratio;          // DG1 / DG2, total power
  std::optional<double> p_pos_ratio, q_pos_ratio;  // DG1 / DG2, positive sequence
  double droop_mismatch = 0.0;  // % between m_p1 P1+ and m_p2 P2+
  double curtailment = 0.0;     // % over both DGs

  std::vector<ModeChange> mode_changes;
  std::vector<FlagInterval> flags;
  EnergyAudit audit;
  double kcl_max = 0.0;  // A
};

// Full-rate records kept for analysis and plot files.
struct WindowRecord {
  double t0 = 0.0;
  double dt = 0.0;
  std::array<std::vector<double>, 3> v_pcc;
  std::array<std::array<std::vector<double>, 3>, kDgCount> v_o, i_o;
  double omega_sum = 0.0;
  std::size_t count = 0;
};

struct RunResult {
  ScenarioConfig config;
  std::vector<TimeSeries> channels;    // decimated, in config order
  std::array<TimeSeries, 3> v_pcc;     // full rate, whole run
  std::array<TimeSeries, kDgCount> v_dc;  // full rate, whole run
  WindowRecord final_window;
  std::optional<WindowRecord> pre_window;  // just before the VCC switches on
  MetricsReport report;
  std::uint64_t steps = 0;
  double wall_seconds = 0.0;
};

// Runs a validated scenario. Throws DivergenceError on plant blow-up and
// ConfigError on an invalid config.
RunResult run(const ScenarioConfig& cfg);

// Quality of the trailing `cycles` cycles of three full-rate phase records.
PowerQuality power_quality(const std::array<std::vector<double>, 3>& abc, double dt, double f1, int cycles,
                           double t_end);

}  // namespace mgsim
