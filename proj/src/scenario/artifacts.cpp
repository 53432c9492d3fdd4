#include "mgsim/scenario/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mgsim {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json quality_json(const PowerQuality& q) {
  Json j;
  j["t_end"] = q.t_end;
  j["f1_hz"] = q.f1;
  j["fundamental_v"] = q.fundamental;
  j["thd_pct"] = {q.thd[0], q.thd[1], q.thd[2]};
  j["thd_max_pct"] = q.thd_max;
  j["hd_pct"] = {{"3", q.hd[0]}, {"5", q.hd[1]}, {"7", q.hd[2]}, {"11", q.hd[3]}};
  j["vuf_pct"] = q.vuf;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// Trailing five fundamental cycles of full-rate records.
std::size_t five_cycles(const WindowRecord& w) {
  const double f1 = w.omega_sum / double(w.count) / (2.0 * std::numbers::pi);
  return std::min(w.count, std::size_t(std::llround(5.0 / (f1 * w.dt))));
}

std::string voltage_window(const WindowRecord& w) {
  std::ostringstream out;
  out << "# t_s v_a_V v_b_V v_c_V\n";
  const std::size_t n = five_cycles(w), first = w.count - n;
  for (std::size_t i = first; i < w.count; ++i)
    out << fmt(w.t0 + double(i) * w.dt) << ' ' << fmt(w.v_pcc[0][i]) << ' ' << fmt(w.v_pcc[1][i]) << ' '
        << fmt(w.v_pcc[2][i]) << '\n';
  return out.str();
}

std::string spectrum_file(const WindowRecord& w, int cycles) {
  const double f1 = w.omega_sum / double(w.count) / (2.0 * std::numbers::pi);
  std::array<Spectrum, 3> sp{spectrum(w.v_pcc[0], w.dt, f1, cycles), spectrum(w.v_pcc[1], w.dt, f1, cycles),
                             spectrum(w.v_pcc[2], w.dt, f1, cycles)};
  std::ostringstream out;
  out << "# f1_Hz " << fmt(f1) << "\n# order mag_a_V mag_b_V mag_c_V pct_a pct_b pct_c\n";
  for (int k = 1; k <= sp[0].max_order(); ++k) {
    out << k;
    for (const auto& s : sp) out << ' ' << fmt(s.magnitude(k));
    for (const auto& s : sp) out << ' ' << fmt(100.0 * s.magnitude(k) / s.magnitude(1));
    out << '\n';
  }
  return out.str();
}

const TimeSeries* find_channel(const RunResult& r, const std::string& name) {
  for (const auto& ts : r.channels)
    if (ts.name == name) return &ts;
  return nullptr;
}

std::string columns(const RunResult& r, const std::vector<std::string>& names, const std::string& file) {
  std::vector<const TimeSeries*> cols;
  for (const auto& n : names) {
    const TimeSeries* ts = find_channel(r, n);
    if (!ts) throw IoError(file + ": channel '" + n + "' was not recorded (add it to output.channels)");
    cols.push_back(ts);
  }
  std::ostringstream out;
  out << "# t_s";
  for (const auto& n : names) out << ' ' << n;
  out << '\n';
  for (std::size_t i = 0; i < cols[0]->samples.size(); ++i) {
    out << fmt(cols[0]->time(i));
    for (const auto* c : cols) out << ' ' << fmt(c->samples[i]);
    out << '\n';
  }
  return out.str();
}

}  // namespace

Json report_json(const RunResult& r) {
  const MetricsReport& m = r.report;
  Json j;
  j["scenario"] = r.config.name;
  j["duration_s"] = r.config.solver.duration;
  j["dt_s"] = r.config.solver.dt;
  j["steps"] = r.steps;
  j["window"] = {{"t_start", m.window.t_start}, {"t_end", m.window.t_end}};
  j["steady"] = m.steady;
  j["steady_window"] = m.steady_window ? Json{{"t_start", m.steady_window->t_start}, {"t_end", m.steady_window->t_end}}
                                       : Json(nullptr);
  if (!m.steady_note.empty()) j["steady_note"] = m.steady_note;
  j["pcc"] = quality_json(m.final_quality);
  j["pcc_pre_compensation"] = m.pre_compensation ? quality_json(*m.pre_compensation) : Json(nullptr);
  j["thd_reduction_pct"] = opt(m.thd_reduction);
  j["vuf_online_pct"] = opt(m.vuf_online);
  j["hd_online_pct"] = {{"3", opt(m.hd_online[0])}, {"5", opt(m.hd_online[1])}, {"7", opt(m.hd_online[2])},
                        {"11", opt(m.hd_online[3])}};
  Json dgs = Json::array();
  for (int k = 0; k < kDgCount; ++k) {
    const DgMetrics& d = m.dg[k];
    dgs.push_back({{"dg", k + 1},
                   {"p_w", d.p},
                   {"q_var", d.q},
                   {"p_pos_w", d.p_pos},
                   {"q_pos_var", d.q_pos},
                   {"omega_rad_s", d.omega},
                   {"v_dc_mean_v", d.v_dc_mean},
                   {"v_dc_min_v", d.v_dc_min},
                   {"v_dc_max_v", d.v_dc_max},
                   {"p_pv_w", d.p_pv},
                   {"p_available_w", d.p_available},
                   {"curtailment_pct", d.curtailment}});
  }
  j["dg"] = dgs;
  j["sharing"] = {{"p_ratio", opt(m.p_ratio)},
                  {"q_ratio", opt(m.q_ratio)},
                  {"p_pos_ratio", opt(m.p_pos_ratio)},
                  {"q_pos_ratio", opt(m.q_pos_ratio)},
                  {"droop_mismatch_pct", m.droop_mismatch}};
  j["curtailment_pct"] = m.curtailment;
  Json modes = Json::array();
  for (const auto& mc : m.mode_changes)
    modes.push_back({{"dg", mc.dg + 1},
                     {"time", mc.transition.time},
                     {"from", std::string(to_string(mc.transition.from))},
                     {"to", std::string(to_string(mc.transition.to))},
                     {"settle_time_s", opt(mc.settle_time)}});
  j["mode_changes"] = modes;
  Json flags = Json::array();
  for (const auto& f : m.flags)
    flags.push_back({{"flag", f.flag}, {"dg", f.dg < 0 ? Json("central") : Json(f.dg + 1)}, {"start", f.start}, {"end", f.end}});
  j["flags"] = flags;
  j["energy"] = {{"pv_in_j", m.audit.pv_in},
                 {"load_j", m.audit.load},
                 {"feeder_loss_j", m.audit.feeder_loss},
                 {"stored_change_j", m.audit.stored_now - m.audit.stored_initial},
                 {"residual_j", m.audit.residual()},
                 {"relative_error", m.audit.relative_error()}};
  j["kcl_max_a"] = m.kcl_max;
  return j;
}

std::string timeseries_csv(const RunResult& r) {
  std::string out = "t";
  for (const auto& ts : r.channels) out += "," + ts.name;
  out += '\n';
  const std::size_t rows = r.channels.empty() ? 0 : r.channels[0].samples.size();
  for (std::size_t i = 0; i < rows; ++i) {
    out += fmt(r.channels[0].time(i));
    for (const auto& ts : r.channels) out += "," + fmt(ts.samples[i]);
    out += '\n';
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> plot_files(const RunResult& r) {
  std::vector<std::pair<std::string, std::string>> files;
  const int cycles = r.config.analysis.cycles;
  if (r.pre_window && r.report.pre_compensation) {
    files.emplace_back("pcc_voltage_pre.dat", voltage_window(*r.pre_window));
    files.emplace_back("pcc_voltage_post.dat", voltage_window(r.final_window));
    files.emplace_back("spectrum_pre.dat", spectrum_file(*r.pre_window, cycles));
    files.emplace_back("spectrum_post.dat", spectrum_file(r.final_window, cycles));
  } else {
    files.emplace_back("pcc_voltage.dat", voltage_window(r.final_window));
    files.emplace_back("spectrum.dat", spectrum_file(r.final_window, cycles));
  }
  files.emplace_back("power.dat", columns(r, {"p1", "q1", "p2", "q2"}, "power.dat"));
  files.emplace_back("dc_link.dat", columns(r, {"v_dc1", "v_dc2", "p_pv1", "p_pv2", "mode1", "mode2"}, "dc_link.dat"));

  const WindowRecord& w = r.final_window;
  std::ostringstream cur;
  cur << "# t_s i1_a_A i1_b_A i1_c_A i2_a_A i2_b_A i2_c_A\n";
  const std::size_t n = five_cycles(w), first = w.count - n;
  for (std::size_t i = first; i < w.count; ++i) {
    cur << fmt(w.t0 + double(i) * w.dt);
    for (int k = 0; k < kDgCount; ++k)
      for (int ph = 0; ph < 3; ++ph) cur << ' ' << fmt(w.i_o[k][ph][i]);
    cur << '\n';
  }
  files.emplace_back("dg_currents.dat", cur.str());
  return files;
}

RunArtifacts write_artifacts(const RunResult& r, const std::string& dir, bool emit_plots) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  RunArtifacts a;
  a.directory = dir;
  a.timeseries = (fs::path(dir) / "timeseries.csv").string();
  a.report = (fs::path(dir) / "report.json").string();
  a.config_echo = (fs::path(dir) / "config.cfg").string();
  write_file(a.timeseries, timeseries_csv(r));
  write_file(a.report, report_json(r).dump(2) + "\n");
  write_file(a.config_echo, to_text(r.config));
  if (emit_plots) {
    const fs::path plots = fs::path(dir) / "plots";
    fs::create_directories(plots, ec);
    if (ec) throw IoError("cannot create '" + plots.string() + "': " + ec.message());
    for (const auto& [name, content] : plot_files(r)) {
      a.plots.push_back((plots / name).string());
      write_file(a.plots.back(), content);
    }
  }
  return a;
}

std::string summarize_report(const Json& j) {
  std::ostringstream out;
  const auto num = [](const Json& v, int prec = 3) {
    if (v.is_null()) return std::string("n/a");
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(prec);
    s << v.get<double>();
    return s.str();
  };
  out << "scenario " << j.at("scenario").get<std::string>() << ", " << num(j.at("duration_s"), 2) << " s at dt "
      << j.at("dt_s").get<double>() << " s\n";
  out << "window " << num(j.at("window").at("t_start")) << " .. " << num(j.at("window").at("t_end"))
      << " s, steady: " << (j.at("steady").get<bool>() ? "yes" : "no") << '\n';
  const auto pq = [&](const char* label, const Json& q) {
    if (q.is_null()) return;
    out << label << ": THD max " << num(q.at("thd_max_pct")) << " % (a " << num(q.at("thd_pct")[0]) << ", b "
        << num(q.at("thd_pct")[1]) << ", c " << num(q.at("thd_pct")[2]) << "), VUF " << num(q.at("vuf_pct"))
        << " %\n";
  };
  pq("PCC before compensation", j.at("pcc_pre_compensation"));
  pq("PCC", j.at("pcc"));
  if (!j.at("thd_reduction_pct").is_null()) out << "THD reduction " << num(j.at("thd_reduction_pct"), 1) << " %\n";
  for (const auto& d : j.at("dg"))
    out << "DG" << d.at("dg").get<int>() << ": P " << num(d.at("p_w"), 0) << " W, Q " << num(d.at("q_var"), 0)
        << " var (P+ " << num(d.at("p_pos_w"), 0) << ", Q+ " << num(d.at("q_pos_var"), 0) << "), v_dc "
        << num(d.at("v_dc_mean_v"), 1) << " V, curtailment " << num(d.at("curtailment_pct"), 2) << " %\n";
  const auto& s = j.at("sharing");
  out << "sharing P1/P2 " << num(s.at("p_ratio")) << ", Q1/Q2 " << num(s.at("q_ratio")) << ", P1+/P2+ "
      << num(s.at("p_pos_ratio")) << ", Q1+/Q2+ " << num(s.at("q_pos_ratio")) << ", droop mismatch "
      << num(s.at("droop_mismatch_pct")) << " %\n";
  for (const auto& m : j.at("mode_changes")) {
    out << "DG" << m.at("dg").get<int>() << " " << m.at("from").get<std::string>() << " -> "
        << m.at("to").get<std::string>() << " at " << num(m.at("time")) << " s";
    if (!m.at("settle_time_s").is_null()) out << ", settled after " << num(m.at("settle_time_s")) << " s";
    out << '\n';
  }
  out << "flags raised: " << j.at("flags").size() << '\n';
  out << "energy audit relative error " << j.at("energy").at("relative_error").get<double>() << '\n';
  return out.str();
}

}  // namespace mgsim
