#include <doctest.h>

#include "mgsim/control.hpp"
#include "mgsim/plant/pv.hpp"
#include "test_util.hpp"

#include <random>

using namespace mgsim;
using mgsim::test::kPi;

namespace {

SequenceSet<Ab> zero_set() {
  SequenceSet<Ab> s;
  s.fundamental_pos.setZero();
  s.fundamental_neg.setZero();
  for (auto& h : s.harmonic) h.setZero();
  return s;
}

Measurements steady_measurements(double v_dc) {
  Measurements m;
  m.v_o.setZero();
  m.i_l.setZero();
  m.i_o.setZero();
  m.v_dc = v_dc;
  return m;
}

}  // namespace

TEST_SUITE("power calculation") {
  TEST_CASE("instantaneous power examples") {
    const PowerPair pq = instantaneous_power(Ab(170.0, 0.0), Ab(10.0, 0.0));
    CHECK(pq.p == doctest::Approx(2550.0).epsilon(1e-15));
    CHECK(pq.q == 0.0);
    const PowerPair zero = instantaneous_power(Ab(170.0, 0.0), Ab(0.0, 0.0));
    CHECK(zero.p == 0.0);
    CHECK(zero.q == 0.0);
  }

  TEST_CASE("current lagging by 90 degrees is pure reactive power after filtering") {
    const double dt = 50e-6, w = 370.0, v = 170.0, i = 10.0;
    Lpf1<double, 2> filter(2.0, dt);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (int n = 0; n < int(1.0 / dt); ++n) {
      const double th = w * n * dt;
      const Ab vo(v * std::cos(th), v * std::sin(th));
      const Ab io(i * std::cos(th - kPi / 2), i * std::sin(th - kPi / 2));
      const PowerPair pq = instantaneous_power(vo, io);
      out = filter.step(Eigen::Vector2d(pq.p, pq.q));
    }
    // independent: P = 1.5 V I cos(90 deg), Q = 1.5 V I sin(90 deg)
    CHECK(std::abs(out(0)) < 1e-6 * 1.5 * v * i);
    CHECK(out(1) == doctest::Approx(1.5 * v * i).epsilon(1e-3));
  }
}

TEST_SUITE("droop") {
  const double dt = 50e-6;

  TEST_CASE("no load gives nominal frequency and amplitude") {
    Droop d(DroopParams{}, dt);
    const auto o = d.step(0.0, 0.0);
    CHECK(o.omega == 370.0);
    CHECK(o.amplitude == doctest::Approx(120.0 * std::sqrt(2.0)));
    CHECK_FALSE(o.clamped);
  }

  TEST_CASE("frequency and amplitude droop arithmetic") {
    Droop d(DroopParams{}, dt);
    CHECK(d.step(1000.0, 0.0).omega == doctest::Approx(368.8).epsilon(1e-12));
    const auto o = d.step(0.0, 500.0);
    CHECK(o.amplitude == doctest::Approx(120.0 * std::sqrt(2.0) - 0.5).epsilon(1e-12));
  }

  TEST_CASE("amplitude clamp raises the flag") {
    DroopParams p;
    Droop d(p, dt);
    const auto low = d.step(0.0, 1e6);
    CHECK(low.clamped);
    CHECK(low.amplitude == doctest::Approx(0.5 * p.v_nominal));
    const auto high = d.step(0.0, -1e6);
    CHECK(high.clamped);
    CHECK(high.amplitude == doctest::Approx(1.2 * p.v_nominal));
  }

  TEST_CASE("phase advances by omega dt and stays wrapped") {
    Droop d(DroopParams{}, dt, 0.3);
    double prev = d.theta();
    for (int n = 0; n < 100000; ++n) {
      const auto o = d.step(500.0, 0.0);
      CHECK(o.theta == prev);
      const double next = d.theta();
      REQUIRE(next >= 0.0);
      REQUIRE(next < 2 * kPi);
      const double adv = mgsim::test::wrap_pi(next - prev);
      REQUIRE(adv == doctest::Approx(o.omega * dt).epsilon(1e-9));
      prev = next;
    }
  }

  TEST_CASE("rating scale moves the frequency droop") {
    Droop a(DroopParams{}, dt), b(DroopParams{}, dt);
    CHECK(b.step(800.0, 0.0, 1.0, 0.8).omega == doctest::Approx(a.step(1000.0, 0.0).omega));
  }

  TEST_CASE("invalid coefficients are rejected") {
    DroopParams p;
    p.m_p = 0.0;
    CHECK_THROWS_AS(Droop(p, dt), ConfigError);
  }
}

TEST_SUITE("virtual impedance") {
  TEST_CASE("zero current gives zero drop") {
    const Ab v = virtual_impedance(zero_set(), VirtualImpedanceParams{});
    CHECK(v.norm() == 0.0);
  }

  TEST_CASE("positive sequence resistive and cross-coupled drop") {
    VirtualImpedanceParams p;
    p.r_pos = 0.3;
    p.l_pos = 0.5;
    p.omega_f = 370.0;
    auto s = zero_set();
    s.fundamental_pos = Ab(10.0, 0.0);
    const Ab v = virtual_impedance(s, p);
    CHECK(v.alpha() == doctest::Approx(3.0));
    CHECK(v.beta() == doctest::Approx(1850.0));
  }

  TEST_CASE("fifth harmonic drop is resistive only") {
    VirtualImpedanceParams p;
    p.r_harmonic[harmonic_slot(-5)] = 1.0;
    auto s = zero_set();
    s.harmonic_at(-5) = Ab(2.0 * std::cos(0.7), 2.0 * std::sin(0.7));
    const Ab v = virtual_impedance(s, p);
    CHECK(v.norm() == doctest::Approx(2.0));
    CHECK(std::abs(v.alpha() * s.harmonic_at(-5).beta() - v.beta() * s.harmonic_at(-5).alpha()) < 1e-12);
  }

  TEST_CASE("negative sequence uses its own resistance") {
    VirtualImpedanceParams p;
    auto s = zero_set();
    s.fundamental_neg = Ab(0.0, -4.0);
    const Ab v = virtual_impedance(s, p);
    CHECK(v.alpha() == 0.0);
    CHECK(v.beta() == doctest::Approx(-4.0 * p.r_neg));
  }
}

TEST_SUITE("reference composition") {
  TEST_CASE("examples") {
    const Ab d(100.0, 0.0), zero(0.0, 0.0);
    CHECK(compose_reference(d, zero, zero) == Eigen::Vector2d(d));
    const Ab r(compose_reference(d, Ab(3.0, 0.0), Ab(1.0, 0.0)));
    CHECK(r.x() == 98.0);
    CHECK(r.y() == 0.0);
  }

  TEST_CASE("affine identity on random inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-200.0, 200.0);
    for (int n = 0; n < 1000; ++n) {
      const Ab a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
      const double k = u(rng) / 50.0;
      const Eigen::Vector2d r = compose_reference(a, b, c);
      REQUIRE((r - (a - b + c)).norm() == 0.0);
      const Eigen::Vector2d scaled = compose_reference(Ab(k * a), Ab(k * b), Ab(k * c));
      REQUIRE((scaled - k * r).norm() <= 1e-12 * (1.0 + r.norm()));
    }
  }
}

TEST_SUITE("primary controller") {
  const double dt = 50e-6;

  TEST_CASE("modulation scales inversely with the DC link") {
    PrimaryController a(PrimaryParams{}, dt), b(PrimaryParams{}, dt);
    PrimaryOutput oa, ob;
    for (int n = 0; n < 400; ++n) {
      oa = a.step(steady_measurements(600.0), Ab(0.0, 0.0));
      ob = b.step(steady_measurements(600.0), Ab(0.0, 0.0));
    }
    // the DC filter sees the same link history; only the bridge scaling differs
    auto m = steady_measurements(600.0);
    oa = a.step(m, Ab(0.0, 0.0));
    m.v_dc = 300.0;
    ob = b.step(m, Ab(0.0, 0.0));
    CHECK(oa.modulation.norm() > 0.0);
    CHECK((ob.modulation - 2.0 * oa.modulation).norm() < 1e-12 * oa.modulation.norm());
  }

  TEST_CASE("low DC link locks the bridge out") {
    PrimaryController c(PrimaryParams{}, dt);
    const auto o = c.step(steady_measurements(20.0), Ab(0.0, 0.0));
    CHECK(o.flags.dc_lockout);
    CHECK(o.modulation.norm() == 0.0);
  }

  TEST_CASE("current reference is limited to 1.5x rated") {
    PrimaryParams p;
    PrimaryController c(p, dt);
    bool limited = false;
    double worst = 0.0;
    for (int n = 0; n < 4000; ++n) {
      const auto o = c.step(steady_measurements(600.0), Ab(0.0, 0.0));
      limited = limited || o.flags.current_limited;
      worst = std::max(worst, o.i_reference.norm());
    }
    CHECK(limited);
    CHECK(worst <= 1.5 * p.rated_current() * (1.0 + 1e-12));
  }

  TEST_CASE("low link derates the droop amplitude") {
    PrimaryParams p;
    p.soft_start = 0.0;
    const double v_nom = p.droop.v_nominal;
    SUBCASE("at the reference the support is inactive") {
      PrimaryController c(p, dt);
      const auto o = c.step(steady_measurements(600.0), Ab(0.0, 0.0));
      CHECK_FALSE(o.flags.dc_support);
      CHECK(o.droop.amplitude == doctest::Approx(v_nom));
    }
    SUBCASE("proportional below the threshold") {
      PrimaryController c(p, dt);
      const auto o = c.step(steady_measurements(500.0), Ab(0.0, 0.0));
      CHECK(o.flags.dc_support);
      CHECK(o.dc_support_scale == doctest::Approx(1.0 - 1e-3 * 80.0));
      CHECK(o.droop.amplitude == doctest::Approx(v_nom * (1.0 - 1e-3 * 80.0)));
    }
    SUBCASE("bounded by the minimum scale") {
      PrimaryController c(p, dt);
      const auto o = c.step(steady_measurements(100.0), Ab(0.0, 0.0));
      CHECK(o.dc_support_scale == 0.7);
    }
    SUBCASE("disabled") {
      p.dc_support.enabled = false;
      PrimaryController c(p, dt);
      const auto o = c.step(steady_measurements(100.0), Ab(0.0, 0.0));
      CHECK(o.dc_support_scale == 1.0);
      CHECK_FALSE(o.flags.dc_support);
    }
  }

  TEST_CASE("soft start ramps the amplitude") {
    PrimaryParams p;
    PrimaryController c(p, dt);
    const auto first = c.step(steady_measurements(600.0), Ab(0.0, 0.0));
    CHECK(first.droop.amplitude == 0.0);
    PrimaryOutput o;
    for (int n = 0; n < 1000; ++n) o = c.step(steady_measurements(600.0), Ab(0.0, 0.0));
    CHECK(o.droop.amplitude == doctest::Approx(p.droop.v_nominal * 1000 * dt / p.soft_start));
  }

  TEST_CASE("bad parameters are rejected") {
    PrimaryParams p;
    p.dc_support.min_scale = 0.0;
    CHECK_THROWS_AS(PrimaryController(p, dt), ConfigError);
    p = PrimaryParams{};
    p.rated_power = -1.0;
    CHECK_THROWS_AS(PrimaryController(p, dt), ConfigError);
  }
}

TEST_SUITE("dc/dc controller") {
  const double dt = 50e-6;

  TEST_CASE("mode selection thresholds") {
    DcdcController c(DcdcParams{}, dt);
    for (int n = 0; n < 1000; ++n) c.select_mode(n * dt, 590.0);
    CHECK(c.mode() == DcdcMode::mppt);
    c.select_mode(0.05, 605.0);
    CHECK(c.mode() == DcdcMode::mppt);  // strictly above the band
    c.select_mode(0.05 + dt, 605.1);
    CHECK(c.mode() == DcdcMode::vr);
    REQUIRE(c.transitions().size() == 1);
    CHECK(c.transitions()[0].time == 0.05 + dt);
    CHECK(c.transitions()[0].to == DcdcMode::vr);
  }

  TEST_CASE("leaving regulation needs a sustained low link") {
    DcdcController c(DcdcParams{}, dt);
    c.select_mode(0.0, 610.0);
    REQUIRE(c.mode() == DcdcMode::vr);
    // first low sample at dt; the hold runs out 100 ms later
    const int hold = int(std::lround(0.1 / dt));
    for (int n = 1; n <= hold; ++n) c.select_mode(n * dt, 585.0);
    CHECK(c.mode() == DcdcMode::vr);
    c.select_mode((hold + 1) * dt, 585.0);
    CHECK(c.mode() == DcdcMode::mppt);
  }

  TEST_CASE("a dip shorter than the hold does not leave regulation") {
    DcdcController c(DcdcParams{}, dt);
    c.select_mode(0.0, 610.0);
    for (int n = 1; n < 1000; ++n) c.select_mode(n * dt, 585.0);
    c.select_mode(1000 * dt, 595.0);
    for (int n = 1001; n < 2500; ++n) c.select_mode(n * dt, 585.0);
    CHECK(c.mode() == DcdcMode::vr);
  }

  TEST_CASE("chattering around the reference never toggles the mode") {
    DcdcController c(DcdcParams{}, dt);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 0; n < 200000; ++n) c.select_mode(n * dt, 600.0 + u(rng));
    CHECK(c.transitions().empty());
    c.select_mode(10.0, 606.0);
    for (int n = 1; n < 200000; ++n) c.select_mode(10.0 + n * dt, 600.0 + u(rng));
    CHECK(c.transitions().size() == 1);
  }

  TEST_CASE("entry into regulation is bumpless") {
    DcdcController c(DcdcParams{}, dt);
    const double before = c.duty();
    const double d = c.step(0.0, 300.0, 5.0, 606.0);
    CHECK(c.mode() == DcdcMode::vr);
    CHECK(std::abs(d - before) <= c.params().ki * 6.0 * dt + 1e-15);
  }

  TEST_CASE("PI with zero error holds its integral") {
    DcdcController c(DcdcParams{}, dt);
    c.select_mode(0.0, 610.0);
    const double i0 = c.vr_integral();
    const double d = c.vr_step(600.0);
    CHECK(d == doctest::Approx(i0));
    CHECK(c.vr_integral() == i0);
  }

  TEST_CASE("constant error integrates until the clamp, then stays bounded") {
    DcdcParams p;
    DcdcController c(p, dt);
    c.select_mode(0.0, 610.0);
    const double i0 = c.vr_integral();
    const double e = 1.0;  // link 1 V below the reference
    for (int n = 1; n <= 1000; ++n) c.vr_step(p.v_ref - e);
    CHECK(c.vr_integral() == doctest::Approx(i0 + p.ki * e * 1000 * dt).epsilon(1e-9));
    for (int n = 0; n < 2000000; ++n) c.vr_step(p.v_ref - e);
    CHECK(c.duty() == p.duty_max);
    CHECK(c.duty_saturated());
    CHECK(c.vr_integral() <= p.duty_max + p.ki * e * dt);
    // winding back is immediate once the error reverses
    c.vr_step(p.v_ref + 50.0);
    CHECK(c.duty() < p.duty_max);
  }

  TEST_CASE("duty always inside the clamp") {
    DcdcParams p;
    DcdcController c(p, dt);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> v(300.0, 700.0), vp(0.0, 500.0), ip(-1.0, 12.0);
    for (int n = 0; n < 200000; ++n) {
      const double d = c.step(n * dt, vp(rng), ip(rng), v(rng));
      REQUIRE(d >= p.duty_min);
      REQUIRE(d <= p.duty_max);
    }
  }

  TEST_CASE("MPPT holds at the maximum power point") {
    DcdcController c(DcdcParams{}, dt);
    const PvArray pv(PvParams{});
    const auto mpp = pv.mpp();
    c.mppt_step(mpp.voltage - 0.01, pv.current(mpp.voltage - 0.01));
    const double d0 = c.duty();
    c.mppt_step(mpp.voltage + 0.01, pv.current(mpp.voltage + 0.01));
    CHECK(c.duty() == d0);
  }

  TEST_CASE("MPPT with no voltage change follows the current") {
    DcdcParams p;
    DcdcController c(p, dt);
    c.mppt_step(300.0, 5.0);
    const double d0 = c.duty();
    c.mppt_step(300.0, 5.5);
    CHECK(c.duty() == doctest::Approx(d0 - p.mppt_step));
    c.mppt_step(300.0, 5.0);
    CHECK(c.duty() == doctest::Approx(d0));
    // no change at all: probe one more step the same way
    c.mppt_step(300.0, 5.0);
    CHECK(c.duty() == doctest::Approx(d0 + p.mppt_step));
  }

  TEST_CASE("MPPT converges on a frozen boost stage") {
    // v_pv = (1 - D) v_dc with the link held at 600 V
    DcdcParams p;
    const double v_dc = 600.0;
    const PvArray pv(PvParams{});
    const auto power_at = [&](double d) {
      const double v = (1.0 - d) * v_dc;
      return v * pv.current(v);
    };
    double best = p.duty_min, best_p = -1.0;
    for (double d = p.duty_min; d <= p.duty_max; d += 1e-5) {
      if (power_at(d) > best_p) {
        best_p = power_at(d);
        best = d;
      }
    }
    DcdcController c(p, dt);
    const int steps = int(std::lround(2.0 / dt));
    double d = c.duty();
    for (int n = 0; n < steps; ++n) {
      const double v = (1.0 - d) * v_dc;
      d = c.step(n * dt, v, pv.current(v), v_dc);
    }
    CHECK(c.mode() == DcdcMode::mppt);
    CHECK(std::abs(d - best) <= 2.0 * p.mppt_step);
  }

  TEST_CASE("dt must divide the MPPT period") {
    DcdcParams p;
    CHECK_THROWS_AS(DcdcController(p, 0.3e-3), ConfigError);
    CHECK_NOTHROW(DcdcController(p, 0.25e-3));
  }

  TEST_CASE("mode names") {
    CHECK(to_string(DcdcMode::mppt) == "MPPT");
    CHECK(to_string(DcdcMode::vr) == "VR");
  }
}
