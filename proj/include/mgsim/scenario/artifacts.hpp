#pragma once

#include "mgsim/scenario/runner.hpp"

#include "json.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace mgsim {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunArtifacts {
  std::string directory;
  std::string timeseries;  // CSV
  std::string report;      // JSON
  std::string config_echo;
  std::vector<std::string> plots;
};

nlohmann::ordered_json report_json(const RunResult& r);

// CSV with a `t` column followed by the configured channels in order.
// Values use the shortest round-trip representation.
std::string timeseries_csv(const RunResult& r);

// Writes timeseries.csv, report.json and config.cfg (and plot data files when
// asked) into `dir`, creating it. Throws IoError.
RunArtifacts write_artifacts(const RunResult& r, const std::string& dir, bool emit_plots);

// Plot data as (file name, content) pairs:
//   pcc_voltage[_pre|_post].dat  5 cycles of PCC phase voltages
//   spectrum[_pre|_post].dat     order, magnitude per phase, % of fundamental
//   power.dat                    P/Q per DG over time
//   dc_link.dat                  v_dc, PV power and mode per DG over time
//   dg_currents.dat              5 cycles of both DGs' output currents
// The _pre/_post pair exists only when the VCC switches on during the run.
std::vector<std::pair<std::string, std::string>> plot_files(const RunResult& r);

// Human-readable summary of a report.json.
std::string summarize_report(const nlohmann::ordered_json& report);

}  // namespace mgsim
