#include "mgsim/scenario/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace mgsim {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::optional<double> to_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Decimal exponent of an SI prefix, 0 if unknown.
int si_prefix(char c) {
  switch (c) {
    case 'p': return -12;
    case 'n': return -9;
    case 'u': return -6;
    case 'm': return -3;
    case 'k': return 3;
    case 'M': return 6;
    default: return 0;
  }
}

// Error raised while handling one key; the parser adds the location.
struct KeyError {
  std::string message;
};

// `text` is "<number> [unit]". Returns the value in the key's unit.
double parse_quantity(const std::string& text, const std::string& unit) {
  const auto parts = split(text, ' ');
  std::vector<std::string> tokens;
  for (const auto& p : parts)
    if (!p.empty()) tokens.push_back(p);
  if (tokens.empty() || tokens.size() > 2) throw KeyError{"expected '<number> [unit]', got '" + text + "'"};
  const auto v = to_number(tokens[0]);
  if (!v) throw KeyError{"'" + tokens[0] + "' is not a number"};
  if (tokens.size() == 1) return *v;
  const std::string& given = tokens[1];
  if (given == unit) return *v;
  const std::string expected = unit.empty() ? "no unit" : "'" + unit + "'";
  if (!unit.empty() && given.size() == unit.size() + 1 && given.substr(1) == unit) {
    // divide by an exact power of ten so "50 us" is the double nearest 5e-5
    const int e = si_prefix(given[0]);
    const double k = std::pow(10.0, std::abs(e));
    if (e < 0) return *v / k;
    if (e > 0) return *v * k;
  }
  throw KeyError{"unit mismatch: expected " + expected + ", got '" + given + "'"};
}

bool parse_flag(const std::string& text) {
  if (text == "on" || text == "true" || text == "yes") return true;
  if (text == "off" || text == "false" || text == "no") return false;
  throw KeyError{"expected on/off, got '" + text + "'"};
}

struct Field {
  std::string key;
  std::string unit;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

class Registry {
 public:
  explicit Registry(ScenarioConfig& c) : c_(c) { build(); }

  const std::vector<Field>& fields() const { return fields_; }
  const Field* find(const std::string& key) const {
    const auto it = index_.find(key);
    return it == index_.end() ? nullptr : &fields_[it->second];
  }
  void finish() {
    if (c_.load.step && pending_scale_) c_.load.step->scale = *pending_scale_;
  }

 private:
  void add(Field f) {
    index_[f.key] = fields_.size();
    fields_.push_back(std::move(f));
  }
  void num(const std::string& key, const std::string& unit, double& x) {
    add({key, unit, [&x, unit](const std::string& s) { x = parse_quantity(s, unit); },
         [&x, unit] { return unit.empty() ? fmt(x) : fmt(x) + " " + unit; }});
  }
  void integer(const std::string& key, int& x) {
    add({key, "", [&x](const std::string& s) {
           const double v = parse_quantity(s, "");
           if (v != std::floor(v) || std::abs(v) > 1e9) throw KeyError{"expected an integer"};
           x = int(v);
         },
         [&x] { return std::to_string(x); }});
  }
  void flag(const std::string& key, bool& x) {
    add({key, "", [&x](const std::string& s) { x = parse_flag(s); }, [&x] { return std::string(x ? "on" : "off"); }});
  }
  void pr(const std::string& prefix, PrParams<double>& p) {
    num(prefix + ".kp", "", p.kp);
    for (auto& r : p.resonators) num(prefix + ".kr" + std::to_string(r.harmonic), "", r.gain);
    add({prefix + ".wc", "rad/s",
         [&p](const std::string& s) {
           const double wc = parse_quantity(s, "rad/s");
           for (auto& r : p.resonators) r.cutoff = wc;
         },
         [&p] { return (p.resonators.empty() ? std::string("2") : fmt(p.resonators.front().cutoff)) + " rad/s"; }});
  }

  void build() {
    auto& c = c_;
    add({"name", "", [&c](const std::string& s) { c.name = s; }, [&c] { return c.name; }});

    num("solver.dt", "s", c.solver.dt);
    add({"solver.method", "",
         [&c](const std::string& s) {
           if (s == "trapezoidal") c.solver.method = SolverMethod::trapezoidal;
           else if (s == "rk4") c.solver.method = SolverMethod::rk4;
           else throw KeyError{"expected trapezoidal or rk4, got '" + s + "'"};
         },
         [&c] { return std::string(c.solver.method == SolverMethod::rk4 ? "rk4" : "trapezoidal"); }});
    num("solver.duration", "s", c.solver.duration);

    for (int k = 0; k < kDgCount; ++k) {
      auto& d = c.dg[k];
      const std::string p = "dg" + std::to_string(k + 1) + ".";
      num(p + "irradiance", "", d.irradiance);
      num(p + "pv.rated_power", "W", d.pv.rated_power);
      num(p + "pv.open_circuit_voltage", "V", d.pv.open_circuit_voltage);
      num(p + "pv.diode_voltage", "V", d.pv.diode_voltage);
      num(p + "dc.boost_inductance", "H", d.dc.boost_inductance);
      num(p + "dc.pv_capacitance", "F", d.dc.pv_capacitance);
      num(p + "dc.link_capacitance", "F", d.dc.link_capacitance);
      num(p + "dc.v_pv0", "V", d.initial.v_pv);
      num(p + "dc.v_dc0", "V", d.initial.v_dc);
      num(p + "dcdc.v_ref", "V", d.dcdc.v_ref);
      num(p + "dcdc.vr_enter_margin", "V", d.dcdc.vr_enter_margin);
      num(p + "dcdc.vr_exit_margin", "V", d.dcdc.vr_exit_margin);
      num(p + "dcdc.vr_exit_hold", "s", d.dcdc.vr_exit_hold);
      num(p + "dcdc.mppt_period", "s", d.dcdc.mppt_period);
      num(p + "dcdc.mppt_step", "", d.dcdc.mppt_step);
      num(p + "dcdc.mppt_deadband", "", d.dcdc.mppt_deadband);
      num(p + "dcdc.kp", "1/V", d.dcdc.kp);
      num(p + "dcdc.ki", "1/(V*s)", d.dcdc.ki);
      num(p + "dcdc.duty_min", "", d.dcdc.duty_min);
      num(p + "dcdc.duty_max", "", d.dcdc.duty_max);
      num(p + "dcdc.duty_initial", "", d.dcdc.duty_initial);

      auto& pr_ = d.primary;
      num(p + "rated_power", "W", pr_.rated_power);
      num(p + "droop.m_p", "rad/s/W", pr_.droop.m_p);
      num(p + "droop.n_p", "V/var", pr_.droop.n_p);
      num(p + "droop.v_nominal", "V", pr_.droop.v_nominal);
      num(p + "droop.omega_nominal", "rad/s", pr_.droop.omega_nominal);
      num(p + "droop.v_min_ratio", "", pr_.droop.v_min_ratio);
      num(p + "droop.v_max_ratio", "", pr_.droop.v_max_ratio);
      num(p + "impedance.r_pos", "ohm", pr_.impedance.r_pos);
      num(p + "impedance.l_pos", "H", pr_.impedance.l_pos);
      num(p + "impedance.r_neg", "ohm", pr_.impedance.r_neg);
      for (std::size_t h = 0; h < kHarmonicOrders.size(); ++h)
        num(p + "impedance.r_h" + std::to_string(std::abs(kHarmonicOrders[h])), "ohm", pr_.impedance.r_harmonic[h]);
      num(p + "impedance.omega_f", "rad/s", pr_.impedance.omega_f);
      pr(p + "voltage_pr", pr_.voltage);
      pr(p + "current_pr", pr_.current);
      num(p + "power_filter", "Hz", pr_.power_filter_hz);
      num(p + "sogi_gain", "", pr_.sogi_gain);
      num(p + "current_limit_ratio", "", pr_.current_limit_ratio);
      num(p + "dc_lockout", "V", pr_.dc_lockout);
      num(p + "soft_start", "s", pr_.soft_start);
      flag(p + "dc_support.enabled", pr_.dc_support.enabled);
      num(p + "dc_support.threshold", "V", pr_.dc_support.threshold);
      num(p + "dc_support.gain", "1/V", pr_.dc_support.gain);
      num(p + "dc_support.min_scale", "", pr_.dc_support.min_scale);
      num(p + "dc_support.filter", "Hz", pr_.dc_support.filter_hz);
      num(p + "filter.inductance", "H", d.filter.inductance);
      num(p + "filter.capacitance", "F", d.filter.capacitance);
      num(p + "feeder.resistance", "ohm", d.feeder.resistance);
      num(p + "feeder.inductance", "H", d.feeder.inductance);
    }

    num("load.balanced_resistance", "ohm", c.load.balanced_resistance);
    add({"load.phase_a_resistance", "ohm",
         [&c](const std::string& s) {
           if (s == "none") c.load.phase_a_resistance.reset();
           else c.load.phase_a_resistance = parse_quantity(s, "ohm");
         },
         [&c] { return c.load.phase_a_resistance ? fmt(*c.load.phase_a_resistance) + " ohm" : std::string("none"); }});
    // order:amplitude[:phase], comma separated; amplitude in A peak, phase in rad
    add({"load.harmonics", "",
         [&c](const std::string& s) {
           c.load.harmonics.clear();
           if (s == "none") return;
           for (const auto& item : split(s, ',')) {
             const auto f = split(item, ':');
             if (f.size() < 2 || f.size() > 3) throw KeyError{"expected order:amplitude[:phase], got '" + item + "'"};
             const auto order = to_number(f[0]), amp = to_number(f[1]);
             const auto phase = f.size() == 3 ? to_number(f[2]) : std::optional<double>(0.0);
             if (!order || !amp || !phase || *order != std::floor(*order))
               throw KeyError{"bad harmonic entry '" + item + "'"};
             c.load.harmonics.push_back({int(*order), *amp, *phase});
           }
         },
         [&c] {
           if (c.load.harmonics.empty()) return std::string("none");
           std::string out;
           for (const auto& h : c.load.harmonics) {
             if (!out.empty()) out += ", ";
             out += std::to_string(h.order) + ":" + fmt(h.amplitude) + ":" + fmt(h.phase);
           }
           return out;
         }});
    add({"load.step.time", "s",
         [&c](const std::string& s) {
           if (s == "none") {
             c.load.step.reset();
             return;
           }
           const double t = parse_quantity(s, "s");
           if (!c.load.step) c.load.step = LoadStep{};
           c.load.step->time = t;
         },
         [&c] { return c.load.step ? fmt(c.load.step->time) + " s" : std::string("none"); }});
    add({"load.step.scale", "",
         [this](const std::string& s) { pending_scale_ = parse_quantity(s, ""); },
         [&c] { return fmt(c.load.step ? c.load.step->scale : 1.0); }});

    add({"vcc.enable", "s",
         [&c](const std::string& s) {
           if (s == "off") c.vcc_enable.reset();
           else if (s == "on") c.vcc_enable = 0.0;
           else c.vcc_enable = parse_quantity(s, "s");
         },
         [&c] { return c.vcc_enable ? fmt(*c.vcc_enable) + " s" : std::string("off"); }});
    num("vcc.vuf_ref", "%", c.vcc.vuf_ref);
    num("vcc.hd_ref", "%", c.vcc.hd_ref);
    const std::array<std::string, 5> loop_names{"neg1", "h3", "h5", "h7", "h11"};
    for (std::size_t k = 0; k < loop_names.size(); ++k) {
      num("vcc." + loop_names[k] + ".kp", "", c.vcc.gains[k].kp);
      num("vcc." + loop_names[k] + ".ki", "1/s", c.vcc.gains[k].ki);
      num("vcc." + loop_names[k] + ".phase_advance", "rad", c.vcc.phase_advance[k]);
    }
    num("vcc.period", "s", c.vcc.period);
    num("vcc.filter", "Hz", c.vcc.filter_hz);
    num("vcc.filter_damping", "", c.vcc.filter_damping);
    num("vcc.output_limit", "V", c.vcc.output_limit);
    num("vcc.pi_limit", "", c.vcc.pi_limit);
    num("vcc.positive_floor", "V", c.vcc.positive_floor);
    integer("vcc.delay_steps", c.vcc.delay_steps);
    num("vcc.pll.kp", "rad/s", c.vcc.pll.kp);
    num("vcc.pll.ki", "rad/s^2", c.vcc.pll.ki);
    num("vcc.pll.omega_nominal", "rad/s", c.vcc.pll.omega_nominal);
    num("vcc.pll.omega_min", "rad/s", c.vcc.pll.omega_min);
    num("vcc.pll.omega_max", "rad/s", c.vcc.pll.omega_max);

    // time:dg:value, comma separated; dg is 1, 2 or all
    add({"events.irradiance", "",
         [&c](const std::string& s) {
           c.irradiance_steps.clear();
           if (s == "none") return;
           for (const auto& item : split(s, ',')) {
             const auto f = split(item, ':');
             if (f.size() != 3) throw KeyError{"expected time:dg:value, got '" + item + "'"};
             const auto t = to_number(f[0]), v = to_number(f[2]);
             int dg = -1;
             if (f[1] == "1") dg = 0;
             else if (f[1] == "2") dg = 1;
             else if (f[1] != "all") throw KeyError{"dg must be 1, 2 or all in '" + item + "'"};
             if (!t || !v) throw KeyError{"bad irradiance entry '" + item + "'"};
             c.irradiance_steps.push_back({*t, dg, *v});
           }
         },
         [&c] {
           if (c.irradiance_steps.empty()) return std::string("none");
           std::string out;
           for (const auto& e : c.irradiance_steps) {
             if (!out.empty()) out += ", ";
             out += fmt(e.time) + ":" + (e.dg < 0 ? std::string("all") : std::to_string(e.dg + 1)) + ":" + fmt(e.value);
           }
           return out;
         }});

    add({"output.channels", "",
         [&c](const std::string& s) {
           c.output.channels.clear();
           for (const auto& ch : split(s, ','))
             if (!ch.empty()) c.output.channels.push_back(ch);
         },
         [&c] {
           std::string out;
           for (const auto& ch : c.output.channels) out += (out.empty() ? "" : ", ") + ch;
           return out;
         }});
    num("output.interval", "s", c.output.interval);

    integer("analysis.cycles", c.analysis.cycles);
    num("analysis.steady_tolerance", "%", c.analysis.steady_tolerance);
    num("analysis.average_window", "s", c.analysis.average_window);
  }

  ScenarioConfig& c_;
  std::vector<Field> fields_;
  std::map<std::string, std::size_t> index_;
  std::optional<double> pending_scale_;
};

bool divides(double dt, double period) {
  const double r = period / dt;
  const double n = std::round(r);
  return n >= 1.0 && std::abs(r - n) <= 1e-6 * n;
}

void require_divides(const ScenarioConfig& c, const std::string& key, double period) {
  if (!divides(c.solver.dt, period))
    throw ConfigError("solver.dt = " + fmt(c.solver.dt) + " s does not divide " + key + " = " + fmt(period) + " s");
}

template <typename F>
void checked(const std::string& where, F&& build) {
  try {
    build();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

PlantParams ScenarioConfig::plant_params() const {
  PlantParams p;
  for (int k = 0; k < kDgCount; ++k) {
    p.network.filter[k] = dg[k].filter;
    p.network.feeder[k] = dg[k].feeder;
    p.dc[k] = dg[k].dc;
    p.pv[k] = dg[k].pv;
  }
  p.load = load;
  p.method = solver.method;
  return p;
}

ScenarioConfig default_config() {
  ScenarioConfig c;
  c.dg[0].pv = PvParams{3000.0};
  c.dg[0].feeder = {0.5, 6.9e-3};

  auto& d2 = c.dg[1];
  d2.pv = PvParams{6000.0};
  d2.feeder = {0.25, 3.45e-3};
  d2.primary.rated_power = 6000.0;
  d2.primary.droop.m_p = 6e-4;
  d2.primary.droop.n_p = 0.5e-3;
  d2.primary.impedance.r_pos = 0.15;
  d2.primary.impedance.l_pos = 0.25e-3;
  d2.primary.impedance.r_neg = 0.2;
  d2.primary.impedance.r_harmonic = {1.5, 0.5, 0.5, 0.25};

  c.load.balanced_resistance = 12.0;
  c.load.phase_a_resistance = 5.0;
  c.load.harmonics = {{3, 1.65, 0.0}, {-5, 2.0, 0.0}, {7, 1.05, 0.0}, {-11, 0.5, 0.0}};
  c.output.channels = default_channels();
  return c;
}

const std::vector<std::string>& available_channels() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"v_pcc_a", "v_pcc_b", "v_pcc_c"};
    for (const char* q : {"v_o", "i_o"})
      for (int k = 1; k <= kDgCount; ++k)
        for (const char* ph : {"a", "b", "c"}) n.push_back(std::string(q) + std::to_string(k) + "_" + ph);
    for (int k = 1; k <= kDgCount; ++k)
      for (const char* q : {"p", "q", "omega", "v_dc", "v_pv", "p_pv", "p_avail", "duty", "mode", "irradiance"})
        n.push_back(std::string(q) + std::to_string(k));
    for (const char* q : {"vuf", "hd3", "hd5", "hd7", "hd11", "theta_pll", "omega_pll", "load_scale"}) n.push_back(q);
    for (int k = 1; k <= kDgCount; ++k)
      for (const char* ax : {"alpha", "beta"}) n.push_back("v_c" + std::to_string(k) + "_" + ax);
    return n;
  }();
  return names;
}

const std::vector<std::string>& default_channels() {
  static const std::vector<std::string> names{
      "v_pcc_a", "v_pcc_b", "v_pcc_c", "p1",  "q1",  "p2",  "q2",    "omega1", "v_dc1",
      "v_dc2",   "p_pv1",   "p_pv2",   "p_avail1", "p_avail2", "mode1", "mode2", "vuf",
      "hd3",     "hd5",     "hd7",     "hd11", "v_c1_alpha", "v_c1_beta", "v_c2_alpha", "v_c2_beta"};
  return names;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg = default_config();
  Registry reg(cfg);
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line, prefix;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": unterminated section header");
      prefix = trim(std::string_view(s).substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = (prefix.empty() ? "" : prefix + ".") + trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    const Field* f = reg.find(key);
    if (!f) throw ConfigError(where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    try {
      f->set(value);
    } catch (const KeyError& e) {
      throw ConfigError(where + ": key '" + key + "': " + e.message);
    }
  }
  reg.finish();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

void validate(const ScenarioConfig& c) {
  if (!(c.solver.dt > 0.0)) throw ConfigError("solver.dt must be positive");
  if (!(c.solver.duration >= c.solver.dt)) throw ConfigError("solver.duration must be at least solver.dt");
  for (int k = 0; k < kDgCount; ++k) {
    const std::string p = "dg" + std::to_string(k + 1) + ".";
    require_divides(c, p + "dcdc.mppt_period", c.dg[k].dcdc.mppt_period);
    if (c.dg[k].irradiance < 0.0) throw ConfigError(p + "irradiance must be non-negative");
  }
  require_divides(c, "vcc.period", c.vcc.period);
  require_divides(c, "output.interval", c.output.interval);

  std::set<std::string> seen;
  const auto& known = available_channels();
  if (c.output.channels.empty()) throw ConfigError("output.channels is empty");
  for (const auto& ch : c.output.channels) {
    if (std::find(known.begin(), known.end(), ch) == known.end())
      throw ConfigError("output.channels: unknown channel '" + ch + "'");
    if (!seen.insert(ch).second) throw ConfigError("output.channels: duplicate channel '" + ch + "'");
  }

  const double T = c.solver.duration;
  if (c.vcc_enable && (*c.vcc_enable < 0.0 || *c.vcc_enable >= T))
    throw ConfigError("vcc.enable = " + fmt(*c.vcc_enable) + " s is outside the run");
  if (c.load.step && (c.load.step->time < 0.0 || c.load.step->time >= T))
    throw ConfigError("load.step.time = " + fmt(c.load.step->time) + " s is outside the run");
  for (const auto& e : c.irradiance_steps) {
    if (e.time < 0.0 || e.time >= T) throw ConfigError("events.irradiance: time " + fmt(e.time) + " s is outside the run");
    if (e.value < 0.0) throw ConfigError("events.irradiance: negative irradiance");
  }
  if (c.analysis.cycles < 5) throw ConfigError("analysis.cycles must be at least 5");
  if (!(c.analysis.steady_tolerance > 0.0)) throw ConfigError("analysis.steady_tolerance must be positive");
  if (!(c.analysis.average_window > 0.0)) throw ConfigError("analysis.average_window must be positive");
  if (c.vcc.delay_steps < 0) throw ConfigError("vcc.delay_steps must be non-negative");

  checked("load", [&] { mgsim::validate(c.load); });
  checked("plant", [&] {
    std::array<DcState, kDgCount> dc0{c.dg[0].initial, c.dg[1].initial};
    Plant plant(c.plant_params(), c.solver.dt, dc0);
  });
  for (int k = 0; k < kDgCount; ++k) {
    const std::string p = "dg" + std::to_string(k + 1);
    checked(p, [&] {
      PrimaryController primary(c.dg[k].primary, c.solver.dt);
      DcdcController dcdc(c.dg[k].dcdc, c.solver.dt);
    });
  }
  checked("vcc", [&] { Vcc vcc(c.vcc, c.solver.dt); });
}

std::string to_text(const ScenarioConfig& cfg) {
  ScenarioConfig copy = cfg;
  Registry reg(copy);
  std::string out;
  for (const auto& f : reg.fields()) out += f.key + " = " + f.get() + "\n";
  return out;
}

}  // namespace mgsim
