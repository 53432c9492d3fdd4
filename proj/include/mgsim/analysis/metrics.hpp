#pragma once

#include <array>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgsim {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TimeSeries {
  std::string name;
  std::string unit;
  double dt = 0.0;
  double t0 = 0.0;  // time of samples[0]
  std::vector<double> samples;

  double time(std::size_t n) const { return t0 + double(n) * dt; }
  double end_time() const { return samples.empty() ? t0 : time(samples.size() - 1); }
  // Samples in [t_start, t_end].
  std::span<const double> window(double t_start, double t_end) const;
};

// Harmonic spectrum of the trailing integer-cycle window of a signal.
struct Spectrum {
  double f1 = 0.0;        // Hz
  int cycles = 0;
  std::size_t samples = 0;
  // index k holds the order-k phasor (cosine reference at the window start)
  std::vector<std::complex<double>> phasor;

  double magnitude(int order) const { return std::abs(phasor.at(order)); }
  int max_order() const { return int(phasor.size()) - 1; }
};

// Fourier coefficients at integer multiples of f1 over exactly the last
// `cycles` fundamental periods (rectangular window, trapezoidal in time).
// Throws AnalysisError on a short record or cycles < 5.
Spectrum spectrum(std::span<const double> x, double dt, double f1, int cycles, int max_order = 50);

// Fundamental magnitude below which distortion indices are undefined.
inline constexpr double kFundamentalFloor = 1e-9;

// 100 sqrt(sum_{k=2..max} M_k^2) / M_1; nullopt when the fundamental collapses.
std::optional<double> thd(const Spectrum& sp, int max_order = 50);
// 100 M_h / M_1 for one order.
std::optional<double> harmonic_distortion(const Spectrum& sp, int order);

struct SequencePhasors {
  std::complex<double> zero, pos, neg;
};
SequencePhasors symmetrical_components(const std::array<std::complex<double>, 3>& abc);
// 100 |V-| / |V+| from per-phase fundamental phasors.
std::optional<double> vuf_from_phasors(const std::array<std::complex<double>, 3>& abc);
std::optional<double> vuf_measured(std::span<const double> a, std::span<const double> b,
                                   std::span<const double> c, double dt, double f1, int cycles);

struct SharingMetrics {
  double p1 = 0, p2 = 0, q1 = 0, q2 = 0;  // window means
  std::optional<double> p_ratio;          // P1 / P2
  std::optional<double> q_ratio;          // Q1 / Q2
};
// Time averages over equal-length windows; a ratio is undefined when its
// denominator mean is below `floor` in magnitude.
SharingMetrics sharing_metrics(std::span<const double> p1, std::span<const double> p2,
                               std::span<const double> q1, std::span<const double> q2,
                               double floor = 1.0);

struct Window {
  double t_start;
  double t_end;
};
// Trailing window over which the per-cycle RMS stays within rel_tol of the
// last cycle's RMS. Requires at least 20 cycles of data and yields at least
// `min_cycles` cycles, else AnalysisError.
Window steady_window(const TimeSeries& ts, double f1, double rel_tol, int min_cycles = 5);

double mean(std::span<const double> x);

}  // namespace mgsim
