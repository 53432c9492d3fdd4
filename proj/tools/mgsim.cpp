#include "mgsim/scenario.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kConfig = 2;
constexpr int kDivergence = 3;
constexpr int kIo = 4;
constexpr int kAnalysis = 5;

void apply_vcc_flag(mgsim::ScenarioConfig& cfg, const std::string& flag) {
  if (flag == "on") cfg.vcc_enable = 0.0;
  else if (flag == "off") cfg.vcc_enable.reset();
  else if (flag.rfind("at=", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string value = flag.substr(3);
      cfg.vcc_enable = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw mgsim::ConfigError("--vcc: expected on, off or at=<seconds>, got '" + flag + "'");
    }
  } else {
    throw mgsim::ConfigError("--vcc: expected on, off or at=<seconds>, got '" + flag + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-DG islanded PV microgrid simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, vcc_flag, run_dir;
  double duration = 0.0, dt = 0.0;
  bool emit_plots = false, seedless = false;

  auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("--out", out_dir, "Output directory (default runs/<config name>)");
  run->add_option("--duration", duration, "Override solver.duration, s");
  run->add_option("--dt", dt, "Override solver.dt, s");
  run->add_option("--vcc", vcc_flag, "on, off or at=<seconds>");
  run->add_flag("--emit-plots", emit_plots, "Write plot data files");
  run->add_flag("--seedless", seedless, "Accepted for compatibility; the simulator uses no randomness");

  auto* val = app.add_subcommand("validate", "Parse and check a scenario config");
  val->add_option("config", config_path, "Scenario config file")->required();

  auto* rep = app.add_subcommand("report", "Summarize a finished run");
  rep->add_option("run-dir", run_dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*val) {
      const auto cfg = mgsim::load_config(config_path);
      mgsim::validate(cfg);
      std::cout << config_path << ": ok\n";
      return kOk;
    }
    if (*rep) {
      const auto path = std::filesystem::path(run_dir) / "report.json";
      std::ifstream in(path);
      if (!in) throw mgsim::IoError("cannot open '" + path.string() + "'");
      nlohmann::ordered_json j;
      try {
        j = nlohmann::ordered_json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw mgsim::IoError(path.string() + ": " + e.what());
      }
      std::cout << mgsim::summarize_report(j);
      return kOk;
    }

    auto cfg = mgsim::load_config(config_path);
    if (duration > 0.0) cfg.solver.duration = duration;
    if (dt > 0.0) cfg.solver.dt = dt;
    if (!vcc_flag.empty()) apply_vcc_flag(cfg, vcc_flag);
    if (out_dir.empty()) out_dir = (std::filesystem::path("runs") / std::filesystem::path(config_path).stem()).string();

    const auto result = mgsim::run(cfg);
    const auto artifacts = mgsim::write_artifacts(result, out_dir, emit_plots);
    std::cout << mgsim::summarize_report(mgsim::report_json(result));
    std::cerr << "wrote " << artifacts.directory << " (" << result.steps << " steps in " << result.wall_seconds
              << " s)\n";
    return kOk;
  } catch (const mgsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const mgsim::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << " (last good time " << e.last_good_time() << " s)\n";
    return kDivergence;
  } catch (const mgsim::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const mgsim::AnalysisError& e) {
    std::cerr << "analysis error: " << e.what() << '\n';
    return kAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
