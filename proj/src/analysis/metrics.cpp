#include "mgsim/analysis/metrics.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace mgsim {

namespace {

constexpr double kPi = std::numbers::pi;


}  // namespace

std::span<const double> TimeSeries::window(double t_start, double t_end) const {
  if (samples.empty() || !(dt > 0.0)) return {};
  const auto first = std::size_t(std::max(0.0, std::ceil((t_start - t0) / dt - 1e-9)));
  auto last = std::size_t(std::max(0.0, std::floor((t_end - t0) / dt + 1e-9)));
  last = std::min(last, samples.size() - 1);
  if (first > last) return {};
  return std::span<const double>(samples).subspan(first, last - first + 1);
}

Spectrum spectrum(std::span<const double> x, double dt, double f1, int cycles, int max_order) {
  if (!(dt > 0.0 && f1 > 0.0)) throw AnalysisError("spectrum: dt and f1 must be positive");
  if (cycles < 5) throw AnalysisError("spectrum: at least 5 cycles are required");
  if (max_order < 1) throw AnalysisError("spectrum: max order must be at least 1");
  // The window is exactly `cycles` periods long and ends on the last sample.
  // When a period is not a whole number of samples the start falls between
  // two samples; that value is interpolated so the window does not leak.
  const double span = double(cycles) / (f1 * dt);
  auto whole = std::size_t(std::floor(span));
  double frac = span - double(whole);
  if (frac > 1.0 - 1e-9) {
    ++whole;
    frac = 0.0;
  } else if (frac < 1e-9) {
    frac = 0.0;
  }
  const std::size_t need = whole + 1 + (frac > 0.0 ? 1 : 0);
  if (whole < 2 || x.size() < need)
    throw AnalysisError("spectrum: need " + std::to_string(need) + " samples, have " + std::to_string(x.size()));
  const auto w = x.subspan(x.size() - whole - 1);  // w[0] is the first sample inside the window
  const double x_start = frac > 0.0 ? w[0] + frac * (x[x.size() - whole - 2] - w[0]) : w[0];

  Spectrum sp;
  sp.f1 = f1;
  sp.cycles = cycles;
  sp.samples = whole + 1;
  sp.phasor.assign(std::size_t(max_order) + 1, {0.0, 0.0});
  for (int k = 0; k <= max_order; ++k) {
    // trapezoidal Fourier integral; each angle evaluated directly, since a
    // rotating recurrence drifts
    const double step = 2.0 * kPi * k * f1 * dt;
    const auto ref = [&](std::size_t i) { return std::polar(1.0, -step * (double(i) + frac)); };
    std::complex<double> acc = 0.5 * (w[0] * ref(0) + w[whole] * ref(whole));
    for (std::size_t i = 1; i < whole; ++i) acc += w[i] * ref(i);
    if (frac > 0.0) acc += 0.5 * frac * (x_start + w[0] * ref(0));
    sp.phasor[k] = (k == 0 ? 1.0 : 2.0) * acc / span;
  }
  return sp;
}

std::optional<double> thd(const Spectrum& sp, int max_order) {
  const double m1 = sp.magnitude(1);
  if (!(m1 > kFundamentalFloor)) return std::nullopt;
  const int top = std::min(max_order, sp.max_order());
  double sum = 0.0;
  for (int k = 2; k <= top; ++k) sum += std::norm(sp.phasor[k]);
  return 100.0 * std::sqrt(sum) / m1;
}

std::optional<double> harmonic_distortion(const Spectrum& sp, int order) {
  const double m1 = sp.magnitude(1);
  if (!(m1 > kFundamentalFloor)) return std::nullopt;
  return 100.0 * sp.magnitude(order) / m1;
}

SequencePhasors symmetrical_components(const std::array<std::complex<double>, 3>& v) {
  const std::complex<double> a = std::polar(1.0, 2.0 * kPi / 3.0);
  return {(v[0] + v[1] + v[2]) / 3.0, (v[0] + a * v[1] + a * a * v[2]) / 3.0,
          (v[0] + a * a * v[1] + a * v[2]) / 3.0};
}

std::optional<double> vuf_from_phasors(const std::array<std::complex<double>, 3>& abc) {
  const SequencePhasors s = symmetrical_components(abc);
  if (!(std::abs(s.pos) > kFundamentalFloor)) return std::nullopt;
  return 100.0 * std::abs(s.neg) / std::abs(s.pos);
}

std::optional<double> vuf_measured(std::span<const double> a, std::span<const double> b,
                                   std::span<const double> c, double dt, double f1, int cycles) {
  return vuf_from_phasors({spectrum(a, dt, f1, cycles, 1).phasor[1],
                           spectrum(b, dt, f1, cycles, 1).phasor[1],
                           spectrum(c, dt, f1, cycles, 1).phasor[1]});
}

double mean(std::span<const double> x) {
  if (x.empty()) throw AnalysisError("mean of an empty window");
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

SharingMetrics sharing_metrics(std::span<const double> p1, std::span<const double> p2,
                               std::span<const double> q1, std::span<const double> q2,
                               double floor) {
  SharingMetrics s;
  s.p1 = mean(p1);
  s.p2 = mean(p2);
  s.q1 = mean(q1);
  s.q2 = mean(q2);
  if (std::abs(s.p2) > floor) s.p_ratio = s.p1 / s.p2;
  if (std::abs(s.q2) > floor) s.q_ratio = s.q1 / s.q2;
  return s;
}

Window steady_window(const TimeSeries& ts, double f1, double rel_tol, int min_cycles) {
  if (!(ts.dt > 0.0 && f1 > 0.0)) throw AnalysisError(ts.name + ": dt and f1 must be positive");
  const double per_cycle = 1.0 / (f1 * ts.dt);
  const auto total_cycles = std::size_t(double(ts.samples.size()) / per_cycle);
  if (total_cycles < 20)
    throw AnalysisError(ts.name + ": steady-window detection needs at least 20 cycles");

  // cycle k covers [end - (k+1) P, end - k P), counted back from the end
  std::vector<double> rms(total_cycles);
  const std::size_t n = ts.samples.size();
  for (std::size_t k = 0; k < total_cycles; ++k) {
    const auto hi = std::size_t(std::llround(double(n) - double(k) * per_cycle));
    const auto lo = std::size_t(std::llround(double(n) - double(k + 1) * per_cycle));
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += ts.samples[i] * ts.samples[i];
    rms[k] = std::sqrt(sum / double(hi - lo));
  }
  const double ref = rms[0];
  const double scale = std::max(std::abs(ref), 1e-12);
  std::size_t steady = 0;
  while (steady < total_cycles && std::abs(rms[steady] - ref) <= rel_tol * scale) ++steady;
  if (steady < std::size_t(min_cycles))
    throw AnalysisError(ts.name + ": no steady window (cycle RMS varies by more than " +
                        std::to_string(100.0 * rel_tol) + "% within the last " +
                        std::to_string(min_cycles) + " cycles)");
  const auto first = std::size_t(std::llround(double(n) - double(steady) * per_cycle));
  return {ts.time(first), ts.end_time()};
}

}  // namespace mgsim
