#include <doctest.h>

#include "mgsim/analysis.hpp"
#include "test_util.hpp"

#include <functional>
#include <random>

using namespace mgsim;
using mgsim::test::kPi;

namespace {

using cd = std::complex<double>;

struct Tone {
  int order;
  double amplitude;
  double phase = 0.0;
};

std::vector<double> synth(const std::vector<Tone>& tones, double f1, double dt, std::size_t n) {
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& t : tones) x[i] += t.amplitude * std::cos(2 * kPi * t.order * f1 * dt * double(i) + t.phase);
  return x;
}

// Symmetrical components written out term by term from the definition:
//   V+ = (Va + a Vb + a^2 Vc) / 3,  V- = (Va + a^2 Vb + a Vc) / 3
double brute_force_vuf(cd va, cd vb, cd vc) {
  const cd a(std::cos(2 * kPi / 3), std::sin(2 * kPi / 3));
  const cd a2 = a * a;
  const cd pos = (va + a * vb + a2 * vc) / 3.0;
  const cd neg = (va + a2 * vb + a * vc) / 3.0;
  return 100.0 * std::abs(neg) / std::abs(pos);
}

// Three phases of a fundamental with the given phasors (peak amplitude).
std::array<std::vector<double>, 3> three_phase(const std::array<cd, 3>& ph, double f1, double dt, std::size_t n) {
  std::array<std::vector<double>, 3> out;
  for (int p = 0; p < 3; ++p) out[p] = synth({{1, std::abs(ph[p]), std::arg(ph[p])}}, f1, dt, n);
  return out;
}

std::array<cd, 3> balanced_phasors(double amp) {
  return {std::polar(amp, 0.0), std::polar(amp, -2 * kPi / 3), std::polar(amp, 2 * kPi / 3)};
}

}  // namespace

TEST_SUITE("spectrum") {
  const double f1 = 50.0, dt = 1e-4;  // 200 samples per cycle

  TEST_CASE("single tone") {
    const auto x = synth({{1, 170.0, -kPi / 2}}, f1, dt, 4000);
    const Spectrum sp = spectrum(x, dt, f1, 10);
    CHECK(sp.magnitude(1) == doctest::Approx(170.0).epsilon(1e-3));
    for (int k = 2; k <= sp.max_order(); ++k) REQUIRE(sp.magnitude(k) < 1e-3 * 170.0);
    CHECK(sp.magnitude(0) < 1e-9);
    CHECK(sp.max_order() == 50);
  }

  TEST_CASE("two tones") {
    const auto x = synth({{1, 100.0, 0.3}, {5, 5.0, -1.2}}, f1, dt, 3000);
    const Spectrum sp = spectrum(x, dt, f1, 10);
    CHECK(sp.magnitude(1) == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(sp.magnitude(5) == doctest::Approx(5.0).epsilon(1e-3));
    // phase referenced to the first sample of the window (index 999)
    CHECK(std::abs(sp.phasor[5] - std::polar(5.0, -1.2 + 5 * 2 * kPi * f1 * dt * 999)) < 1e-9);
  }

  TEST_CASE("period that is not a whole number of samples") {
    // 58.5 Hz at 50 us: 341.9 samples per cycle
    const double f = 58.5, h = 50e-6;
    const auto x = synth({{1, 170.0, 0.1}, {3, 4.0, 0.7}, {11, 1.0, -0.4}}, f, h, 20000);
    const Spectrum sp = spectrum(x, h, f, 10);
    CHECK(sp.magnitude(1) == doctest::Approx(170.0).epsilon(1e-3));
    CHECK(sp.magnitude(3) == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(sp.magnitude(11) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(sp.magnitude(5) < 1e-3);
    CHECK(sp.magnitude(2) < 1e-3);
  }

  TEST_CASE("zero signal") {
    const std::vector<double> x(4000, 0.0);
    const Spectrum sp = spectrum(x, dt, f1, 10);
    for (const auto& p : sp.phasor) CHECK(std::abs(p) == 0.0);
    CHECK_FALSE(thd(sp).has_value());
  }

  TEST_CASE("short record and too few cycles are errors") {
    const std::vector<double> x(1001, 1.0);
    CHECK_THROWS_AS(spectrum(x, dt, f1, 10), AnalysisError);
    CHECK_THROWS_AS(spectrum(x, dt, f1, 4), AnalysisError);
    CHECK_NOTHROW(spectrum(x, dt, f1, 5));
  }

  TEST_CASE("uses only the trailing window") {
    auto x = synth({{1, 10.0}}, f1, dt, 4000);
    for (std::size_t i = 0; i < 1000; ++i) x[i] += 50.0;  // earlier junk
    CHECK(spectrum(x, dt, f1, 10).magnitude(1) == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_SUITE("thd") {
  TEST_CASE("hand arithmetic on a spectrum") {
    Spectrum sp;
    sp.phasor.assign(51, cd(0.0, 0.0));
    sp.phasor[1] = 1.0;
    sp.phasor[5] = cd(0.0, 0.05);
    sp.phasor[7] = -0.03;
    const double expected = 100.0 * std::sqrt(0.05 * 0.05 + 0.03 * 0.03);
    CHECK(std::abs(*thd(sp) - expected) < 1e-9);
    CHECK(std::abs(*thd(sp) - 5.8309518948453) < 1e-9);
  }

  TEST_CASE("same case through the DFT") {
    const double f1 = 50.0, dt = 1e-4;
    const auto x = synth({{1, 1.0, 0.2}, {5, 0.05, 1.0}, {7, 0.03, -2.0}}, f1, dt, 2001);
    CHECK(std::abs(*thd(spectrum(x, dt, f1, 10)) - 5.8309518948453) < 1e-9);
    CHECK(*harmonic_distortion(spectrum(x, dt, f1, 10), 5) == doctest::Approx(5.0).epsilon(1e-9));
  }

  TEST_CASE("single tone has none") {
    const auto x = synth({{1, 3.0}}, 50.0, 1e-4, 2001);
    CHECK(*thd(spectrum(x, 1e-4, 50.0, 10)) < 1e-9);
  }

  TEST_CASE("order cap") {
    Spectrum sp;
    sp.phasor.assign(51, cd(0.0, 0.0));
    sp.phasor[1] = 1.0;
    sp.phasor[40] = 0.1;
    CHECK(*thd(sp, 39) == 0.0);
    CHECK(*thd(sp) == doctest::Approx(10.0));
  }

  TEST_CASE("invariant to uniform scaling") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> amp(0.0, 0.1), ph(-kPi, kPi), k(1e-3, 1e3);
    for (int n = 0; n < 50; ++n) {
      std::vector<Tone> tones{{1, 1.0, ph(rng)}};
      for (int h = 2; h <= 13; ++h) tones.push_back({h, amp(rng), ph(rng)});
      const double s = k(rng);
      auto scaled = tones;
      for (auto& t : scaled) t.amplitude *= s;
      const double a = *thd(spectrum(synth(tones, 50.0, 1e-4, 1001), 1e-4, 50.0, 5));
      const double b = *thd(spectrum(synth(scaled, 50.0, 1e-4, 1001), 1e-4, 50.0, 5));
      REQUIRE(b == doctest::Approx(a).epsilon(1e-9));
    }
  }
}

TEST_SUITE("vuf") {
  const double f1 = 50.0, dt = 1e-4;

  TEST_CASE("balanced set") {
    const auto v = three_phase(balanced_phasors(170.0), f1, dt, 2001);
    CHECK(*vuf_measured(v[0], v[1], v[2], dt, f1, 10) < 1e-9);
  }

  TEST_CASE("phase a ten percent high") {
    auto ph = balanced_phasors(1.0);
    ph[0] *= 1.1;
    const double oracle = brute_force_vuf(ph[0], ph[1], ph[2]);
    CHECK(oracle == doctest::Approx(3.2258).epsilon(1e-4));  // (0.1/3) / (3.1/3)
    CHECK(std::abs(*vuf_from_phasors(ph) - oracle) < 1e-6);
    const auto v = three_phase(ph, f1, dt, 2001);
    CHECK(std::abs(*vuf_measured(v[0], v[1], v[2], dt, f1, 10) - oracle) < 1e-6);
  }

  TEST_CASE("random phasors against the brute-force oracle") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> amp(0.7, 1.3), dph(-0.3, 0.3), k(0.1, 400.0);
    for (int n = 0; n < 500; ++n) {
      const double s = k(rng);
      std::array<cd, 3> ph;
      for (int p = 0; p < 3; ++p) ph[p] = std::polar(s * amp(rng), -2 * kPi * p / 3 + dph(rng));
      const double oracle = brute_force_vuf(ph[0], ph[1], ph[2]);
      REQUIRE(std::abs(*vuf_from_phasors(ph) - oracle) < 1e-6);
      if (n % 25 == 0) {
        const auto v = three_phase(ph, f1, dt, 1001);
        REQUIRE(std::abs(*vuf_measured(v[0], v[1], v[2], dt, f1, 5) - oracle) < 1e-6);
      }
    }
  }

  TEST_CASE("invariant to uniform scaling") {
    auto ph = balanced_phasors(1.0);
    ph[1] *= std::polar(0.9, 0.1);
    const auto v = three_phase(ph, f1, dt, 2001);
    const double base = *vuf_measured(v[0], v[1], v[2], dt, f1, 10);
    for (double s : {1e-3, 0.5, 7.0, 2e3}) {
      std::array<cd, 3> q{s * ph[0], s * ph[1], s * ph[2]};
      const auto w = three_phase(q, f1, dt, 2001);
      CHECK(*vuf_measured(w[0], w[1], w[2], dt, f1, 10) == doctest::Approx(base).epsilon(1e-9));
    }
  }

  TEST_CASE("harmonics do not enter the fundamental unbalance") {
    auto ph = balanced_phasors(100.0);
    auto v = three_phase(ph, f1, dt, 2001);
    // an unbalanced fifth on phase a only
    const auto h = synth({{5, 8.0, 0.4}}, f1, dt, 2001);
    for (std::size_t i = 0; i < h.size(); ++i) v[0][i] += h[i];
    CHECK(*vuf_measured(v[0], v[1], v[2], dt, f1, 10) < 1e-9);
  }

  TEST_CASE("collapsed fundamental is undefined") {
    const std::array<cd, 3> zero{};
    CHECK_FALSE(vuf_from_phasors(zero).has_value());
  }
}

TEST_SUITE("sharing") {
  TEST_CASE("constant powers") {
    const std::vector<double> p1(100, 1000.0), p2(100, 2000.0), q1(100, 300.0), q2(100, 600.0);
    const auto s = sharing_metrics(p1, p2, q1, q2);
    CHECK(*s.p_ratio == 0.5);
    CHECK(*s.q_ratio == 0.5);
    CHECK(s.p1 == 1000.0);
  }

  TEST_CASE("zero load is flagged, not NaN") {
    const std::vector<double> z(100, 0.0), p(100, 10.0);
    const auto s = sharing_metrics(p, z, p, z);
    CHECK_FALSE(s.p_ratio.has_value());
    CHECK_FALSE(s.q_ratio.has_value());
  }

  TEST_CASE("window mean") {
    std::vector<double> p1, p2;
    for (int i = 0; i < 1000; ++i) {
      p1.push_back(1000.0 + 50.0 * std::sin(0.01 * i));
      p2.push_back(2000.0);
    }
    const auto s = sharing_metrics(p1, p2, p2, p2);
    CHECK(*s.p_ratio == doctest::Approx(mean(p1) / 2000.0));
    CHECK_THROWS_AS(mean(std::vector<double>{}), AnalysisError);
  }
}

TEST_SUITE("steady window") {
  const double f1 = 50.0, dt = 1e-4;

  TimeSeries make(std::function<double(double)> amp, double seconds) {
    TimeSeries ts{"v", "V", dt, 0.0, {}};
    const auto n = std::size_t(std::llround(seconds / dt));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = double(i) * dt;
      ts.samples.push_back(amp(t) * std::cos(2 * kPi * f1 * t));
    }
    return ts;
  }

  TEST_CASE("constant sinusoid is steady over the whole record") {
    const auto ts = make([](double) { return 170.0; }, 2.0);
    const Window w = steady_window(ts, f1, 0.005);
    CHECK(w.t_start <= 1.0 / f1);
    CHECK(w.t_end == ts.end_time());
  }

  TEST_CASE("settling after a step") {
    // amplitude steps at 1 s and settles with a 20 ms time constant
    const double tau = 0.02, tol = 0.005;
    const auto ts = make([&](double t) { return t < 1.0 ? 100.0 : 150.0 - 50.0 * std::exp(-(t - 1.0) / tau); }, 3.0);
    const Window w = steady_window(ts, f1, tol);
    // independent settle estimate: 50 e^{-s/tau} = tol * 150
    const double settle = 1.0 + tau * std::log(50.0 / (tol * 150.0));
    CHECK(std::abs(w.t_start - settle) <= 2.0 / f1);
  }

  TEST_CASE("ramp never settles") {
    const auto ts = make([](double t) { return 100.0 + 50.0 * t; }, 2.0);
    CHECK_THROWS_AS(steady_window(ts, f1, 0.005), AnalysisError);
  }

  TEST_CASE("too short a record") {
    const auto ts = make([](double) { return 1.0; }, 0.3);
    CHECK_THROWS_AS(steady_window(ts, f1, 0.005), AnalysisError);
  }
}

TEST_SUITE("time series") {
  TEST_CASE("window selects inclusive sample range") {
    TimeSeries ts{"x", "", 0.1, 1.0, {0, 1, 2, 3, 4, 5}};
    const auto w = ts.window(1.2, 1.4);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == 2);
    CHECK(w[2] == 4);
    CHECK(ts.window(5.0, 6.0).empty());
    CHECK(ts.end_time() == doctest::Approx(1.5));
  }
}
