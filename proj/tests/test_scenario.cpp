#include <doctest.h>

#include "mgsim/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mgsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string scenario_path(const std::string& name) { return std::string(MGSIM_SCENARIO_DIR) + "/" + name + ".cfg"; }

// A short run that still has a pre-compensation window.
ScenarioConfig short_config() {
  auto cfg = parse_config(R"(
name = short
solver.duration = 1.2 s
vcc.enable = 0.6 s
analysis.average_window = 0.4 s
)");
  return cfg;
}

std::string error_of(const std::string& text) {
  try {
    validate(parse_config(text, "test.cfg"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("mgsim_test_" + tag);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty text is the default config") {
    CHECK(to_text(parse_config("")) == to_text(default_config()));
    CHECK(to_text(parse_config("# only a comment\n\n")) == to_text(default_config()));
  }

  TEST_CASE("values with and without units") {
    const auto cfg = parse_config(R"(
dg1.droop.n_p = 1e-3
dg2.droop.n_p = 0.5 mV/var
solver.dt = 25 us
[load]
balanced_resistance = 10 ohm
)");
    CHECK(cfg.dg[0].primary.droop.n_p == 1e-3);
    CHECK(cfg.dg[1].primary.droop.n_p == doctest::Approx(0.5e-3).epsilon(1e-15));
    CHECK(cfg.solver.dt == doctest::Approx(25e-6).epsilon(1e-15));
    CHECK(cfg.load.balanced_resistance == 10.0);
  }

  TEST_CASE("unit mismatch names the key") {
    const std::string e = error_of("solver.dt = 50 V\n");
    CHECK(contains(e, "solver.dt"));
    CHECK(contains(e, "test.cfg:1"));
  }

  TEST_CASE("unknown and duplicate keys are rejected") {
    CHECK(contains(error_of("dg1.droop.mp = 1e-3\n"), "dg1.droop.mp"));
    CHECK(contains(error_of("[dg3]\nirradiance = 1\n"), "dg3.irradiance"));
    CHECK(contains(error_of("solver.duration = 1 s\nsolver.duration = 2 s\n"), "solver.duration"));
    CHECK_FALSE(error_of("solver.duration = banana\n").empty());
  }

  TEST_CASE("step that does not divide the MPPT period names both keys") {
    const std::string e = error_of("solver.dt = 30 us\n");
    CHECK(contains(e, "solver.dt"));
    CHECK(contains(e, "dcdc.mppt_period"));
  }

  TEST_CASE("other invariants") {
    CHECK(contains(error_of("output.channels = v_pcc_a, nonsense\n"), "nonsense"));
    CHECK_FALSE(error_of("events.irradiance = 40:all:0.5\n").empty());  // after the end
    CHECK_FALSE(error_of("analysis.cycles = 3\n").empty());
    CHECK_FALSE(error_of("dg1.droop.m_p = -1\n").empty());
    CHECK(error_of("events.irradiance = 4:1:0.5, 6:all:0.8\n").empty());
  }

  TEST_CASE("echo parses back to the same config") {
    for (const char* name : {"baseline", "sharing", "loadstep"}) {
      const auto cfg = load_config(scenario_path(name));
      CHECK_NOTHROW(validate(cfg));
      const std::string text = to_text(cfg);
      CHECK(to_text(parse_config(text)) == text);
    }
  }

  TEST_CASE("shipped baseline is the default") {
    auto cfg = load_config(scenario_path("baseline"));
    cfg.name = default_config().name;
    CHECK(to_text(cfg) == to_text(default_config()));
  }

  TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/mgsim.cfg"), ConfigError);
  }
}

TEST_SUITE("runner") {
  TEST_CASE("bit-identical repeated runs") {
    const auto cfg = short_config();
    const RunResult a = run(cfg), b = run(cfg);
    CHECK(timeseries_csv(a) == timeseries_csv(b));
    CHECK(report_json(a).dump() == report_json(b).dump());
  }

  TEST_CASE("CSV header follows the channel list") {
    auto cfg = short_config();
    cfg.solver.duration = 0.3;
    cfg.vcc_enable.reset();
    cfg.analysis.average_window = 0.2;
    cfg.output.channels = {"v_dc2", "p1", "v_pcc_a"};
    cfg.output.interval = 0.1;
    const std::string csv = timeseries_csv(run(cfg));
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,v_dc2,p1,v_pcc_a");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 3);  // t = 0, 0.1, 0.2: samples are taken at the start of each step
  }

  TEST_CASE("artifacts and re-run from the echo") {
    const auto cfg = short_config();
    const fs::path dir = temp_dir("echo");
    const RunResult r = run(cfg);
    const RunArtifacts art = write_artifacts(r, dir.string(), true);
    CHECK(fs::exists(dir / "timeseries.csv"));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "config.cfg"));

    const RunResult again = run(load_config((dir / "config.cfg").string()));
    const fs::path dir2 = temp_dir("echo2");
    write_artifacts(again, dir2.string(), true);
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), dir);
      CHECK_MESSAGE(slurp(entry.path()) == slurp(dir2 / rel), rel.string());
    }

    // plot files: pre/post pair because the VCC switches on
    CHECK(fs::exists(dir / "plots" / "pcc_voltage_pre.dat"));
    CHECK(fs::exists(dir / "plots" / "spectrum_post.dat"));
    CHECK_FALSE(fs::exists(dir / "plots" / "pcc_voltage.dat"));
    CHECK(art.plots.size() == 7);
    fs::remove_all(dir);
    fs::remove_all(dir2);
  }

  TEST_CASE("plot file contracts") {
    auto cfg = short_config();
    cfg.vcc_enable.reset();
    const RunResult r = run(cfg);
    const auto files = plot_files(r);
    std::map<std::string, std::string> byname(files.begin(), files.end());
    REQUIRE(byname.count("pcc_voltage.dat") == 1);
    CHECK(byname.count("pcc_voltage_pre.dat") == 0);

    // spectrum: one row per order 1..50, magnitude and percent per phase
    std::istringstream sp(byname["spectrum.dat"]);
    int rows = 0, last_order = 0;
    for (std::string line; std::getline(sp, line);) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream fields(line);
      int order;
      double v[6];
      fields >> order >> v[0] >> v[1] >> v[2] >> v[3] >> v[4] >> v[5];
      REQUIRE(fields);
      CHECK(order == last_order + 1);
      if (order == 1) CHECK(v[3] == doctest::Approx(100.0));
      last_order = order;
      ++rows;
    }
    CHECK(rows == 50);

    // voltage window: five fundamental periods
    std::istringstream vw(byname["pcc_voltage.dat"]);
    std::vector<double> t;
    for (std::string line; std::getline(vw, line);) {
      if (line.empty() || line[0] == '#') continue;
      t.push_back(std::stod(line));
    }
    const double f1 = r.report.final_quality.f1;
    const double span = t.back() - t.front() + cfg.solver.dt;
    CHECK(span == doctest::Approx(5.0 / f1).epsilon(cfg.solver.dt * f1 / 5.0 + 1e-12));
  }

  TEST_CASE("plots need their channels") {
    auto cfg = short_config();
    cfg.output.channels = {"v_pcc_a"};
    const RunResult r = run(cfg);
    try {
      plot_files(r);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(contains(e.what(), "p1"));
    }
  }

  TEST_CASE("report keys are fixed") {
    const RunResult r = run(short_config());
    const auto j = report_json(r);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    const std::vector<std::string> head{"scenario", "duration_s", "dt_s", "steps", "window", "steady"};
    REQUIRE(keys.size() > head.size());
    for (std::size_t i = 0; i < head.size(); ++i) CHECK(keys[i] == head[i]);
    for (const char* k : {"pcc", "pcc_pre_compensation", "thd_reduction_pct", "dg", "sharing", "curtailment_pct",
                          "mode_changes", "flags", "energy", "kcl_max_a"})
      CHECK_MESSAGE(j.contains(k), k);
    CHECK(j["dg"].size() == 2);
    CHECK(summarize_report(j).find("scenario short") != std::string::npos);
  }

  TEST_CASE("irradiance events reach the plant") {
    auto cfg = short_config();
    cfg.vcc_enable.reset();
    cfg.irradiance_steps = {{0.5, 1, 0.4}};
    cfg.output.channels = {"irradiance1", "irradiance2", "p_avail2"};
    const RunResult r = run(cfg);
    const auto& irr1 = r.channels[0].samples;
    const auto& irr2 = r.channels[1].samples;
    CHECK(irr1.back() == 1.0);
    CHECK(irr2.front() == 1.0);
    CHECK(irr2.back() == 0.4);
    CHECK(r.channels[2].samples.back() < 0.5 * r.channels[2].samples.front());
  }

  TEST_CASE("energy audit and KCL on a short run") {
    const RunResult r = run(short_config());
    CHECK(r.report.audit.relative_error() < 5e-3);
    CHECK(r.report.kcl_max < 1e-9);
  }
}
