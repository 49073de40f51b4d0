#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "rotcool/errors.hpp"
#include "rotcool/kinematics.hpp"
#include "rotcool/molecule.hpp"
#include "rotcool/trajectory.hpp"
#include "rotcool/units.hpp"

using namespace rotcool;
using std::numbers::pi;

namespace {

double eV(double x) { return units::eV_to_hartree(x); }

// Half width of the exact pulse, found by bisection on eps(t) = eps0 / 2.
double exact_fwhm(const Trajectory& tr) {
  const double half = 0.5 * tr.geometry().eps0;
  double lo = 0.0, hi = tr.t_max();
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tr.at(mid).eps() > half ? lo : hi) = mid;
  }
  return 2.0 * 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("trajectory_field") {

TEST_CASE("closest approach") {
  CHECK(closest_approach(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(closest_approach(eV(1.0), 1e7) / 1e7 == doctest::Approx(1.0).epsilon(1e-6));
  for (double E : {eV(0.1), eV(1.0), eV(5.0)}) {
    for (double b : {0.0, 3.0, 40.0, 900.0}) {
      const auto g = CollisionGeometry::make(E, b, 4155.36);
      const double L = b * std::sqrt(2.0 * g.mu * E);
      CHECK(1.0 / g.r0 + L * L / (2.0 * g.mu * g.r0 * g.r0) == doctest::Approx(E).epsilon(1e-13));
      CHECK(g.angular_momentum() == doctest::Approx(L));
    }
  }
}

TEST_CASE("Lorentzian pulse shape") {
  const double E = eV(1.0);
  const auto head_on = CollisionGeometry::make(E, 0.0, 3024.57);
  CHECK(lorentzian_field(head_on, 0.0) == doctest::Approx(E * E).epsilon(1e-14));
  const auto g = CollisionGeometry::make(E, 25.0, 3024.57);
  CHECK(lorentzian_field(g, 0.5 * g.tau) == doctest::Approx(0.5 * g.eps0));
  CHECK(lorentzian_field(g, -0.5 * g.tau) == doctest::Approx(0.5 * g.eps0));
  CHECK(g.tau == doctest::Approx(1.86 * std::sqrt(g.mu / (E * E * E))));
  const double h = 1e-3 * g.tau, t = 0.3 * g.tau;
  const double fd = (lorentzian_field(g, t + h) - lorentzian_field(g, t - h)) / (2 * h);
  CHECK(lorentzian_field_rate(g, t) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("deflection matches the closed-form scattering angle") {
  for (double E : {eV(0.1), eV(0.5), eV(2.0), eV(10.0)}) {
    for (double b : {0.0, 0.5, 5.0, 40.0, 300.0, 5000.0, 5e4}) {
      const Trajectory tr = Trajectory::integrate(E, b, 22473.21);
      CAPTURE(E);
      CAPTURE(b);
      CHECK(std::abs(tr.deflection_angle() / scattering_angle(E, b) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("r and beta follow the analytic hyperbola") {
  for (double E : {eV(0.3), eV(2.0)}) {
    for (double b : {0.0, 2.0, 60.0, 800.0}) {
      const Trajectory tr = Trajectory::integrate(E, b, 4155.36);
      const oracle::Hyperbola hyp(E, b, 4155.36);
      CHECK(hyp.total_sweep() == doctest::Approx(pi - scattering_angle(E, b)).epsilon(1e-13));
      for (double f : {-0.9, -0.3, -0.01, 0.0, 0.02, 0.2, 0.7, 1.0}) {
        const double t = f * tr.t_max();
        const TrajectoryState s = tr.at(t);
        CAPTURE(t);
        CHECK(s.r == doctest::Approx(hyp.r(t)).epsilon(1e-9));
        CHECK(std::abs(s.beta - hyp.swept_angle(t)) < 1e-9 * (1.0 + hyp.total_sweep()));
      }
    }
  }
}

TEST_CASE("head-on field keeps a fixed axis") {
  const Trajectory tr = Trajectory::integrate(eV(1.0), 0.0, 4155.36);
  for (double f : {-1.0, -0.2, 0.0, 0.4, 1.0}) CHECK(tr.at(f * tr.t_max()).beta == 0.0);
}

TEST_CASE("r and eps are even in time, beta is monotone, eps never exceeds its peak") {
  const Trajectory tr = Trajectory::integrate(eV(0.8), 35.0, 32463.57);
  const double r0 = tr.geometry().r0, eps0 = tr.geometry().eps0;
  double prev_beta = -1.0;
  for (int i = -200; i <= 200; ++i) {
    const double t = tr.t_max() * i / 200.0;
    const TrajectoryState a = tr.at(t), b = tr.at(-t);
    CHECK(a.r == doctest::Approx(b.r).epsilon(1e-14));
    CHECK(a.r >= r0 * (1.0 - 1e-12));
    CHECK(a.eps() <= eps0 * (1.0 + 1e-12));
    CHECK(a.beta >= prev_beta);
    prev_beta = a.beta;
  }
}

TEST_CASE("energy and angular momentum are conserved") {
  for (const auto& sys : builtin_registry()) {
    for (double E : {eV(0.1), eV(2.5)}) {
      for (double b : {0.0, 10.0, 1e4}) {
        const Trajectory tr = Trajectory::integrate(E, b, sys.mu);
        CHECK(tr.energy_drift() < 1e-8);
        CHECK(tr.angular_momentum_drift() < 1e-8);
      }
    }
  }
}

TEST_CASE("head-on pulse width is within 5% of the Lorentzian width") {
  for (const auto& sys : builtin_registry()) {
    for (double e : {0.1, 0.3, 1.0, 3.0, 10.0}) {
      const double E = eV(e);
      const Trajectory tr = Trajectory::integrate(E, 0.0, sys.mu);
      CAPTURE(sys.name());
      CAPTURE(e);
      CHECK(std::abs(exact_fwhm(tr) / lorentzian_tau(E, sys.mu) - 1.0) < 0.05);
    }
  }
}

TEST_CASE("head-on fluence of both field models") {
  const double E = eV(1.0), mu = 22473.21;
  const Trajectory tr = Trajectory::integrate(E, 0.0, mu);
  const double T = tr.t_max();
  const double exact = 2.0 * oracle::integrate([&](double t) { return tr.at(t).eps(); }, 0.0, T);
  // tail beyond t_max: r ~ v t, eps ~ 1 / (v t)^2
  const double v = tr.geometry().speed();
  const double tail = 2.0 / (v * v * T);
  // analytic: int dt / r^2 over the head-on orbit = 2 sqrt(2 mu E)
  CHECK(exact + tail == doctest::Approx(2.0 * std::sqrt(2.0 * mu * E)).epsilon(1e-4));
  const auto& g = tr.geometry();
  const double lorentz = g.eps0 * pi * g.tau / 2.0;
  CHECK(std::abs(lorentz / (exact + tail) - 1.0) < 0.15);
}

TEST_CASE("sampling and the convenience wrapper") {
  const Trajectory tr = Trajectory::integrate(eV(1.0), 12.0, 4155.36);
  const auto samples = tr.sample_uniform(11);
  REQUIRE(samples.size() == 11);
  CHECK(samples.front().t == doctest::Approx(-tr.t_max()));
  CHECK(samples[5].t == doctest::Approx(0.0));
  CHECK(samples[5].r == doctest::Approx(tr.geometry().r0).epsilon(1e-12));
  const std::vector<double> times{-100.0, 0.0, 250.0};
  const auto w = propagate_trajectory(eV(1.0), 12.0, 4155.36, times);
  CHECK(w[1].eps == doctest::Approx(tr.geometry().eps0).epsilon(1e-12));
  CHECK(w[2].r == doctest::Approx(tr.at(250.0).r).epsilon(1e-10));
  CHECK_THROWS_AS(tr.at(2.0 * tr.t_max()), std::out_of_range);
  CHECK_THROWS_AS(Trajectory::integrate(-1.0, 0.0, 1.0), ConfigError);
}

}
