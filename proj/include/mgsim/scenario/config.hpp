#pragma once

#include "mgsim/control.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/vcc.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace mgsim {

struct SolverConfig {
  double dt = 50e-6;  // s
  SolverMethod method = SolverMethod::trapezoidal;
  double duration = 30.0;  // s
};

struct DgConfig {
  PvParams pv;
  DcStageParams dc;
  DcdcParams dcdc;
  PrimaryParams primary;
  LcFilterParams filter;
  FeederParams feeder;
  double irradiance = 1.0;
  DcState initial{380.0, 0.0, 600.0};
};

struct IrradianceStep {
  double time = 0.0;
  int dg = -1;  // -1: every DG
  double value = 1.0;
};

struct OutputConfig {
  std::vector<std::string> channels;
  double interval = 1e-3;  // s between CSV rows
};

struct AnalysisConfig {
  int cycles = 10;               // fundamental cycles for spectra
  double steady_tolerance = 0.5;  // % cycle-RMS variation
  double average_window = 1.0;   // s, trailing window for means
};

struct ScenarioConfig {
  std::string name = "baseline";
  SolverConfig solver;
  std::array<DgConfig, kDgCount> dg;
  LoadSpec load;
  VccParams vcc;
  std::optional<double> vcc_enable = 2.0;  // s; nullopt keeps the VCC off
  std::vector<IrradianceStep> irradiance_steps;
  OutputConfig output;
  AnalysisConfig analysis;

  PlantParams plant_params() const;
};

// Every defaulted field, i.e. the calibrated baseline.
ScenarioConfig default_config();

// Channels a run can write, in their canonical order.
const std::vector<std::string>& available_channels();
const std::vector<std::string>& default_channels();

// Text schema: one `key = value [unit]` per line, `#` comments, and optional
// `[prefix]` headers that are prepended to the keys below them. Values are
// numbers, words (on/off, method names) or comma lists. A unit, when given,
// must match the key's unit up to an SI prefix. Errors name the origin, line
// and full key.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::string& path);

// Checks cross-field invariants (step divides controller periods, known
// channels, event times inside the run, ...) and builds every component once
// so their own parameter checks run. Throws ConfigError.
void validate(const ScenarioConfig& cfg);

// Fully resolved config in the same schema; parsing it back gives an equal
// config.
std::string to_text(const ScenarioConfig& cfg);

}  // namespace mgsim
