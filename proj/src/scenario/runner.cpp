#include "mgsim/scenario/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace mgsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Snapshot {
  double t = 0.0;
  ThreePhase<double> v_pcc;
  std::array<ThreePhase<double>, kDgCount> v_o, i_o;
  std::array<PrimaryOutput, kDgCount> primary;
  std::array<DcState, kDgCount> dc;
  std::array<double, kDgCount> p_pv{}, p_avail{}, duty{}, mode{}, irradiance{};
  VccOutput vcc;
  double load_scale = 1.0;
};

using Extractor = std::function<double(const Snapshot&)>;

Extractor extractor(const std::string& name) {
  const auto opt = [](const std::optional<double>& v) { return v ? *v : kNaN; };
  const auto phase = [](char c) { return c == 'a' ? 0 : c == 'b' ? 1 : 2; };
  if (name.rfind("v_pcc_", 0) == 0) {
    const int ph = phase(name.back());
    return [ph](const Snapshot& s) { return s.v_pcc(ph); };
  }
  if (name.size() == 6 && (name.rfind("v_o", 0) == 0 || name.rfind("i_o", 0) == 0)) {
    const int dg = name[3] - '1', ph = phase(name[5]);
    if (name[0] == 'v') return [dg, ph](const Snapshot& s) { return s.v_o[dg](ph); };
    return [dg, ph](const Snapshot& s) { return s.i_o[dg](ph); };
  }
  if (name.rfind("v_c", 0) == 0) {
    const int dg = name[3] - '1', ax = name.back() == 'a' ? 0 : 1;
    return [dg, ax](const Snapshot& s) { return s.vcc.v_c[dg](ax); };
  }
  static const std::map<std::string, std::function<double(const Snapshot&, int)>> per_dg{
      {"p", [](const Snapshot& s, int k) { return s.primary[k].p_filtered; }},
      {"q", [](const Snapshot& s, int k) { return s.primary[k].q_filtered; }},
      {"omega", [](const Snapshot& s, int k) { return s.primary[k].droop.omega; }},
      {"v_dc", [](const Snapshot& s, int k) { return s.dc[k].v_dc; }},
      {"v_pv", [](const Snapshot& s, int k) { return s.dc[k].v_pv; }},
      {"p_pv", [](const Snapshot& s, int k) { return s.p_pv[k]; }},
      {"p_avail", [](const Snapshot& s, int k) { return s.p_avail[k]; }},
      {"duty", [](const Snapshot& s, int k) { return s.duty[k]; }},
      {"mode", [](const Snapshot& s, int k) { return s.mode[k]; }},
      {"irradiance", [](const Snapshot& s, int k) { return s.irradiance[k]; }},
  };
  const char last = name.back();
  if (last == '1' || last == '2') {
    const auto it = per_dg.find(name.substr(0, name.size() - 1));
    if (it != per_dg.end() && name != "hd11") {
      const int dg = last - '1';
      const auto f = it->second;
      return [f, dg](const Snapshot& s) { return f(s, dg); };
    }
  }
  if (name == "vuf") return [opt](const Snapshot& s) { return opt(s.vcc.vuf); };
  if (name == "hd3") return [opt](const Snapshot& s) { return opt(s.vcc.hd[0]); };
  if (name == "hd5") return [opt](const Snapshot& s) { return opt(s.vcc.hd[1]); };
  if (name == "hd7") return [opt](const Snapshot& s) { return opt(s.vcc.hd[2]); };
  if (name == "hd11") return [opt](const Snapshot& s) { return opt(s.vcc.hd[3]); };
  if (name == "theta_pll") return [](const Snapshot& s) { return s.vcc.theta; };
  if (name == "omega_pll") return [](const Snapshot& s) { return s.vcc.omega; };
  if (name == "load_scale") return [](const Snapshot& s) { return s.load_scale; };
  throw ConfigError("unknown channel '" + name + "'");
}

// Tracks one boolean condition as merged on-intervals.
class FlagTrack {
 public:
  FlagTrack(std::string name, int dg, double merge_gap) : name_(std::move(name)), dg_(dg), gap_(merge_gap) {}

  void update(bool on, double t, std::vector<FlagInterval>& out) {
    if (on) {
      if (!active_) {
        if (pending_ && t - pending_->end <= gap_) {
          current_ = *pending_;
        } else {
          flush(out);
          current_ = FlagInterval{name_, dg_, t, t};
        }
        pending_.reset();
        active_ = true;
      }
      current_.end = t;
    } else if (active_) {
      active_ = false;
      pending_ = current_;
    }
  }
  void finish(std::vector<FlagInterval>& out) {
    if (active_) {
      pending_ = current_;
      active_ = false;
    }
    flush(out);
  }

 private:
  void flush(std::vector<FlagInterval>& out) {
    if (pending_) out.push_back(*pending_);
    pending_.reset();
  }

  std::string name_;
  int dg_;
  double gap_;
  bool active_ = false;
  FlagInterval current_{};
  std::optional<FlagInterval> pending_;
};

void record(WindowRecord& w, const Snapshot& s) {
  for (int ph = 0; ph < 3; ++ph) {
    w.v_pcc[ph].push_back(s.v_pcc(ph));
    for (int k = 0; k < kDgCount; ++k) {
      w.v_o[k][ph].push_back(s.v_o[k](ph));
      w.i_o[k][ph].push_back(s.i_o[k](ph));
    }
  }
  w.omega_sum += s.primary[0].droop.omega;
  ++w.count;
}

double window_f1(const WindowRecord& w) { return w.omega_sum / double(w.count) / (2.0 * std::numbers::pi); }

// Fundamental positive-sequence P and Q from the trailing integer cycles.
std::pair<double, double> positive_power(const std::array<std::vector<double>, 3>& v,
                                         const std::array<std::vector<double>, 3>& i, double dt, double f1,
                                         int cycles) {
  std::array<std::complex<double>, 3> vp, ip;
  for (int ph = 0; ph < 3; ++ph) {
    vp[ph] = spectrum(v[ph], dt, f1, cycles, 1).phasor[1];
    ip[ph] = spectrum(i[ph], dt, f1, cycles, 1).phasor[1];
  }
  const auto s = 1.5 * symmetrical_components(vp).pos * std::conj(symmetrical_components(ip).pos);
  return {s.real(), s.imag()};
}

int whole_cycles(const WindowRecord& w, double f1) {
  return int(std::floor(double(w.count) * w.dt * f1 * (1.0 - 1e-9)));
}

}  // namespace

std::string channel_unit(const std::string& name) {
  if (name.rfind("v_", 0) == 0) return "V";
  if (name.rfind("i_o", 0) == 0) return "A";
  if (name.rfind("p_", 0) == 0 || name == "p1" || name == "p2") return "W";
  if (name == "q1" || name == "q2") return "var";
  if (name.rfind("omega", 0) == 0) return "rad/s";
  if (name == "vuf" || name.rfind("hd", 0) == 0) return "%";
  if (name == "theta_pll") return "rad";
  return "";
}

PowerQuality power_quality(const std::array<std::vector<double>, 3>& abc, double dt, double f1, int cycles,
                           double t_end) {
  PowerQuality q;
  q.t_end = t_end;
  q.f1 = f1;
  std::array<std::complex<double>, 3> fund;
  constexpr std::array<int, 4> orders{3, 5, 7, 11};
  for (int ph = 0; ph < 3; ++ph) {
    const Spectrum sp = spectrum(abc[ph], dt, f1, cycles);
    const auto t = thd(sp);
    if (!t) throw AnalysisError("PCC fundamental collapsed");
    q.thd[ph] = *t;
    q.thd_max = std::max(q.thd_max, *t);
    for (std::size_t k = 0; k < orders.size(); ++k) q.hd[k] = std::max(q.hd[k], *harmonic_distortion(sp, orders[k]));
    fund[ph] = sp.phasor[1];
    q.fundamental += sp.magnitude(1) / 3.0;
  }
  q.vuf = vuf_from_phasors(fund).value_or(kNaN);
  return q;
}

RunResult run(const ScenarioConfig& cfg_in) {
  validate(cfg_in);
  const auto wall0 = std::chrono::steady_clock::now();
  RunResult res;
  res.config = cfg_in;
  const ScenarioConfig& cfg = res.config;
  const double dt = cfg.solver.dt;
  const auto steps = std::uint64_t(std::llround(cfg.solver.duration / dt));
  const auto at_step = [dt](double t) { return std::uint64_t(std::llround(t / dt)); };

  std::array<DcState, kDgCount> dc0{cfg.dg[0].initial, cfg.dg[1].initial};
  Plant plant(cfg.plant_params(), dt, dc0);
  std::array<PrimaryController, kDgCount> primary{PrimaryController(cfg.dg[0].primary, dt),
                                                  PrimaryController(cfg.dg[1].primary, dt)};
  std::array<DcdcController, kDgCount> dcdc{DcdcController(cfg.dg[0].dcdc, dt), DcdcController(cfg.dg[1].dcdc, dt)};
  VccParams vp = cfg.vcc;
  for (int k = 0; k < kDgCount; ++k) vp.rated_power[k] = cfg.dg[k].primary.rated_power;
  Vcc vcc(vp, dt);
  const bool vcc_toggles = cfg.vcc_enable.has_value();
  const std::uint64_t vcc_on = vcc_toggles ? at_step(*cfg.vcc_enable) : 0;

  // channels
  const auto every = std::uint64_t(std::llround(cfg.output.interval / dt));
  std::vector<Extractor> extract;
  for (const auto& name : cfg.output.channels) {
    extract.push_back(extractor(name));
    res.channels.push_back(TimeSeries{name, channel_unit(name), cfg.output.interval, 0.0, {}});
    res.channels.back().samples.reserve(std::size_t(steps / every + 1));
  }
  for (int ph = 0; ph < 3; ++ph) {
    res.v_pcc[ph] = TimeSeries{std::string("v_pcc_") + "abc"[ph], "V", dt, 0.0, {}};
    res.v_pcc[ph].samples.reserve(steps);
  }
  for (int k = 0; k < kDgCount; ++k) {
    res.v_dc[k] = TimeSeries{"v_dc" + std::to_string(k + 1), "V", dt, 0.0, {}};
    res.v_dc[k].samples.reserve(steps);
  }

  // analysis windows
  const double window = std::min(cfg.analysis.average_window, cfg.solver.duration);
  const std::uint64_t final_from = steps - std::min(steps, at_step(window));
  res.final_window.t0 = double(final_from) * dt;
  res.final_window.dt = dt;
  std::uint64_t pre_from = 0, pre_until = 0;
  if (vcc_toggles && vcc_on > 0) {
    pre_until = vcc_on;
    pre_from = pre_until - std::min(pre_until, at_step(window));
    res.pre_window = WindowRecord{};
    res.pre_window->t0 = double(pre_from) * dt;
    res.pre_window->dt = dt;
  }
  std::array<double, kDgCount> p_sum{}, q_sum{}, e_pv{}, e_avail{}, vdc_sum{};
  std::array<double, kDgCount> vdc_min, vdc_max;
  vdc_min.fill(std::numeric_limits<double>::infinity());
  vdc_max.fill(-std::numeric_limits<double>::infinity());

  // flags, merged over gaps up to one nominal cycle
  const double gap = 2.0 * std::numbers::pi / cfg.dg[0].primary.droop.omega_nominal;
  std::vector<FlagTrack> tracks;
  for (int k = 0; k < kDgCount; ++k)
    for (const char* f : {"voltage_clamped", "current_limited", "dc_lockout", "dc_support", "bridge_saturated",
                          "duty_saturated"})
      tracks.emplace_back(f, k, gap);
  tracks.emplace_back("vcc_output_clamped", -1, gap);
  tracks.emplace_back("vcc_positive_collapse", -1, gap);

  std::array<double, kDgCount> irradiance{cfg.dg[0].irradiance, cfg.dg[1].irradiance};
  auto events = cfg.irradiance_steps;
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  std::size_t next_event = 0;

  PlantControls controls;
  Snapshot s;
  double kcl_max = 0.0;
  for (std::uint64_t n = 0; n < steps; ++n) {
    const double t = double(n) * dt;
    while (next_event < events.size() && at_step(events[next_event].time) <= n) {
      const auto& e = events[next_event++];
      for (int k = 0; k < kDgCount; ++k)
        if (e.dg < 0 || e.dg == k) irradiance[k] = e.value;
    }
    if (vcc_toggles && n == vcc_on) vcc.set_enabled(true);

    s.t = t;
    s.v_pcc = plant.v_pcc();
    s.vcc = vcc.step(s.v_pcc);
    for (int k = 0; k < kDgCount; ++k) {
      s.v_o[k] = plant.v_o(k);
      s.i_o[k] = plant.i_o(k);
      s.dc[k] = plant.dc(k);
      s.primary[k] = primary[k].step({s.v_o[k], plant.i_l(k), s.i_o[k], s.dc[k].v_dc}, s.vcc.v_c[k]);
      controls.modulation[k] = s.primary[k].modulation;
      const double i_pv = plant.stage(k).pv().current(s.dc[k].v_pv, irradiance[k]);
      controls.duty[k] = dcdc[k].step(t, s.dc[k].v_pv, i_pv, s.dc[k].v_dc);
      s.p_pv[k] = s.dc[k].v_pv * i_pv;
      s.p_avail[k] = plant.stage(k).pv().mpp(irradiance[k]).power();
      s.duty[k] = controls.duty[k];
      s.mode[k] = dcdc[k].mode() == DcdcMode::vr ? 1.0 : 0.0;
      s.irradiance[k] = irradiance[k];
    }
    s.load_scale = cfg.load.scale_at(t);

    if (n % every == 0)
      for (std::size_t c = 0; c < extract.size(); ++c) res.channels[c].samples.push_back(extract[c](s));
    for (int ph = 0; ph < 3; ++ph) res.v_pcc[ph].samples.push_back(s.v_pcc(ph));
    for (int k = 0; k < kDgCount; ++k) res.v_dc[k].samples.push_back(s.dc[k].v_dc);

    if (n >= final_from) {
      record(res.final_window, s);
      for (int k = 0; k < kDgCount; ++k) {
        p_sum[k] += s.primary[k].p_filtered;
        q_sum[k] += s.primary[k].q_filtered;
        e_pv[k] += s.p_pv[k];
        e_avail[k] += s.p_avail[k];
        vdc_sum[k] += s.dc[k].v_dc;
      }
    }
    if (n >= pre_from && n < pre_until) record(*res.pre_window, s);
    for (int k = 0; k < kDgCount; ++k) {
      vdc_min[k] = std::min(vdc_min[k], s.dc[k].v_dc);
      vdc_max[k] = std::max(vdc_max[k], s.dc[k].v_dc);
    }

    auto& out = res.report.flags;
    std::size_t ti = 0;
    for (int k = 0; k < kDgCount; ++k) {
      const auto& f = s.primary[k].flags;
      tracks[ti++].update(f.voltage_clamped, t, out);
      tracks[ti++].update(f.current_limited, t, out);
      tracks[ti++].update(f.dc_lockout, t, out);
      tracks[ti++].update(f.dc_support, t, out);
      tracks[ti++].update(plant.bridge_saturated(k), t, out);
      tracks[ti++].update(dcdc[k].duty_saturated(), t, out);
    }
    tracks[ti++].update(s.vcc.flags.output_clamped, t, out);
    tracks[ti++].update(s.vcc.flags.positive_collapse, t, out);

    plant.step(controls, wrap_angle(s.vcc.theta + s.vcc.omega * dt), irradiance);
    kcl_max = std::max(kcl_max, plant.kcl_residual());
  }
  res.steps = steps;
  for (auto& tr : tracks) tr.finish(res.report.flags);
  std::stable_sort(res.report.flags.begin(), res.report.flags.end(),
                   [](const auto& a, const auto& b) { return a.start < b.start; });

  // report
  MetricsReport& rep = res.report;
  rep.audit = plant.audit();
  rep.kcl_max = kcl_max;
  const WindowRecord& fw = res.final_window;
  rep.window = {fw.t0, fw.t0 + double(fw.count - 1) * dt};
  const double f1 = window_f1(fw);
  const double t_end = rep.window.t_end;
  rep.final_quality = power_quality(fw.v_pcc, dt, f1, cfg.analysis.cycles, t_end);
  rep.vuf_online = s.vcc.vuf;
  rep.hd_online = s.vcc.hd;

  double last_event = 0.0;
  if (cfg.vcc_enable) last_event = std::max(last_event, *cfg.vcc_enable);
  if (cfg.load.step) last_event = std::max(last_event, cfg.load.step->time);
  for (const auto& e : events) last_event = std::max(last_event, e.time);
  try {
    TimeSeries tail{"v_pcc_a", "V", dt, 0.0, {}};
    const auto span = res.v_pcc[0].window(last_event, cfg.solver.duration);
    tail.t0 = cfg.solver.duration - dt * double(span.size());
    tail.samples.assign(span.begin(), span.end());
    rep.steady_window = steady_window(tail, f1, cfg.analysis.steady_tolerance / 100.0, cfg.analysis.cycles);
    rep.steady = rep.steady_window->t_start <= rep.window.t_start + dt;
    if (!rep.steady) rep.steady_note = "steady window is shorter than the averaging window";
  } catch (const AnalysisError& e) {
    rep.steady_note = e.what();
  }

  const int cycles = whole_cycles(fw, f1);
  for (int k = 0; k < kDgCount; ++k) {
    auto& d = rep.dg[k];
    const double count = double(fw.count);
    d.p = p_sum[k] / count;
    d.q = q_sum[k] / count;
    d.omega = 2.0 * std::numbers::pi * f1;
    std::tie(d.p_pos, d.q_pos) = positive_power(fw.v_o[k], fw.i_o[k], dt, f1, std::max(cycles, 5));
    d.v_dc_mean = vdc_sum[k] / count;
    d.v_dc_min = vdc_min[k];
    d.v_dc_max = vdc_max[k];
    d.p_pv = e_pv[k] / count;
    d.p_available = e_avail[k] / count;
    d.curtailment = e_avail[k] > 0.0 ? 100.0 * (1.0 - e_pv[k] / e_avail[k]) : 0.0;
  }
  const double avail = e_avail[0] + e_avail[1];
  rep.curtailment = avail > 0.0 ? 100.0 * (1.0 - (e_pv[0] + e_pv[1]) / avail) : 0.0;
  const auto ratio = [](double a, double b) { return std::abs(b) > 1.0 ? std::optional(a / b) : std::nullopt; };
  rep.p_ratio = ratio(rep.dg[0].p, rep.dg[1].p);
  rep.q_ratio = ratio(rep.dg[0].q, rep.dg[1].q);
  rep.p_pos_ratio = ratio(rep.dg[0].p_pos, rep.dg[1].p_pos);
  rep.q_pos_ratio = ratio(rep.dg[0].q_pos, rep.dg[1].q_pos);
  const double d1 = cfg.dg[0].primary.droop.m_p * rep.dg[0].p_pos;
  const double d2 = cfg.dg[1].primary.droop.m_p * rep.dg[1].p_pos;
  rep.droop_mismatch = std::max(std::abs(d1), std::abs(d2)) > 0.0
                           ? 100.0 * std::abs(d1 - d2) / std::max(std::abs(d1), std::abs(d2))
                           : 0.0;

  if (res.pre_window && res.pre_window->count > 0) {
    const WindowRecord& pw = *res.pre_window;
    const double f1_pre = window_f1(pw);
    if (whole_cycles(pw, f1_pre) >= cfg.analysis.cycles) {
      rep.pre_compensation =
          power_quality(pw.v_pcc, dt, f1_pre, cfg.analysis.cycles, pw.t0 + double(pw.count - 1) * dt);
      const double before = rep.pre_compensation->thd_max;
      if (before > 0.0) rep.thd_reduction = 100.0 * (1.0 - rep.final_quality.thd_max / before);
    }
  }

  for (int k = 0; k < kDgCount; ++k) {
    const auto& trs = dcdc[k].transitions();
    const double ref = cfg.dg[k].dcdc.v_ref;
    for (std::size_t j = 0; j < trs.size(); ++j) {
      ModeChange mc{k, trs[j], std::nullopt};
      if (trs[j].to == DcdcMode::vr) {
        // last sample outside the band before the next transition (or the end)
        const std::uint64_t from = at_step(trs[j].time);
        const std::uint64_t to = j + 1 < trs.size() ? at_step(trs[j + 1].time) : steps;
        const auto& v = res.v_dc[k].samples;
        std::optional<std::uint64_t> last_out;
        for (std::uint64_t n = from; n < to && n < v.size(); ++n)
          if (std::abs(v[n] - ref) > 0.02 * ref) last_out = n;
        if (!last_out) mc.settle_time = 0.0;
        else if (*last_out + 1 < to) mc.settle_time = double(*last_out + 1 - from) * dt;
      }
      rep.mode_changes.push_back(mc);
    }
  }
  std::stable_sort(rep.mode_changes.begin(), rep.mode_changes.end(),
                   [](const auto& a, const auto& b) { return a.transition.time < b.transition.time; });

  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return res;
}

}  // namespace mgsim
