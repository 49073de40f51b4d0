#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "rotcool/errors.hpp"
#include "rotcool/estimators.hpp"
#include "rotcool/rotor.hpp"
#include "rotcool/units.hpp"

using namespace rotcool;

namespace {

double eV(double x) { return units::eV_to_hartree(x); }

double chi_Q_direct(const CollisionSystem& s, double E, double b) {
  const double r0 = 0.5 / E + std::sqrt(0.25 / (E * E) + b * b);
  return 3.0 * s.molecule.Q_Z * std::pow(r0, -3.0) / (4.0 * s.molecule.B);
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("kappa integral against the Bessel closed form") {
  CHECK(kappa_integral(0.0).value.real() == 2.0);
  for (double k : {1e-4, 0.01, 0.1, 0.3, 0.7, 1.0, 1.5, 2.5, 4.0, 6.0}) {
    const double ref = oracle::kappa_integral_bessel(k);
    CAPTURE(k);
    CHECK(std::abs(kappa_integral(k).value.real() - ref) < 1e-8);
    CHECK(std::abs(kappa_integral(k).value.imag()) < 1e-12);
  }
}

TEST_CASE("kappa-form and time-form agree") {
  for (double k : {0.0, 0.05, 0.2, 0.5, 1.0, 2.0, 3.0}) {
    const double a = kappa_integral(k).norm2(), b = kappa_integral_time(k).norm2();
    CAPTURE(k);
    CHECK(std::abs(a / b - 1.0) < 1e-6);
  }
}

TEST_CASE("kappa integral decays monotonically") {
  double prev = 2.0;
  for (double k = 0.05; k < 6.0; k += 0.05) {
    const double v = kappa_integral(k).value.real();
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
}

TEST_CASE("kappa fit") {
  const std::vector<double> grid = default_kappa_grid();
  const KappaFit fit = fit_kappa(grid);
  CHECK(fit.a1 == doctest::Approx(6.83).epsilon(0.10));
  CHECK(fit.a2 == doctest::Approx(0.40).epsilon(0.10));
  CHECK(fit.a3 == doctest::Approx(2.93).epsilon(0.10));
  CHECK(fit(0.0) == 2.0);
  CHECK(fit.rms_residual < 2e-3);
  CHECK(fit.squared(0.7) == doctest::Approx(fit(0.7) * fit(0.7)));
  double worst = 0.0;
  for (double k : grid) worst = std::max(worst, std::abs(fit(k) - oracle::kappa_integral_bessel(k)));
  CHECK(worst < 0.02);
  CHECK(KappaFit::tabulated()(0.0) == 2.0);
  CHECK(KappaFit::estimated()(0.0) == 2.0);
}

TEST_CASE("fit grid spans the registry kappa range") {
  const auto [lo, hi] = kappa_range(builtin_registry(), eV(0.05), eV(10.0));
  const auto grid = default_kappa_grid(400, 1e-6);
  CHECK(grid.front() == doctest::Approx(lo));
  CHECK(grid.back() <= hi);
  CHECK(oracle::kappa_integral_bessel(grid.back()) < 2e-6);
}

TEST_CASE("first-order amplitude") {
  const auto& h2 = lookup("H2+");
  for (double b : {0.0, 10.0, 100.0}) {
    const ChiParameters c = chi_parameters(h2, eV(1.0), b);
    const double I = oracle::kappa_integral_bessel(c.kappa);
    CHECK(pt_amplitude(h2, eV(1.0), b).probability() ==
          doctest::Approx(c.chi_Q * c.chi_Q * c.kappa * c.kappa * I * I / 45.0).epsilon(1e-8));
  }
  // |c|^2 / eps0^3 is b-independent at fixed kappa
  const double ref = pt_amplitude(h2, eV(1.0), 0.0).probability() / std::pow(eV(1.0), 6.0);
  for (double b : {3.0, 30.0, 3000.0}) {
    const double eps0 = CollisionGeometry::make(eV(1.0), b, h2.mu).eps0;
    CHECK(pt_amplitude(h2, eV(1.0), b).probability() / std::pow(eps0, 3.0) == doctest::Approx(ref).epsilon(1e-12));
  }
  CollisionSystem bare = h2;
  bare.molecule.Q_Z = 0.0;
  CHECK(pt_amplitude(bare, eV(1.0), 0.0).probability() == 0.0);
}

TEST_CASE("averaged chi_Q^2") {
  const auto& n2 = lookup("N2+");
  for (double d : {2e4, 1e5, 4e5}) {
    for (double e : {0.5, 2.0}) {
      const double E = eV(e), bm = 0.5 * d;
      const auto avg = averaged_chiQ2(n2, E, d);
      const double direct = 2.0 / (bm * bm) *
                            (oracle::integrate([&](double b) { return std::pow(chi_Q_direct(n2, E, b), 2) * b; }, 0.0, 20.0 / E) +
                             oracle::integrate([&](double b) { return std::pow(chi_Q_direct(n2, E, b), 2) * b; }, 20.0 / E, bm));
      CHECK(avg.quadrature == doctest::Approx(direct).epsilon(1e-8));
      if (bm * 2.0 * E > 1e3) CHECK(avg.closed_form == doctest::Approx(direct).epsilon(0.01));
    }
  }
  const double a = averaged_chiQ2(n2, eV(1.0), 1e5).closed_form;
  CHECK(averaged_chiQ2(n2, eV(1.0), 2e5).closed_form == doctest::Approx(a / 4.0).epsilon(1e-14));
}

TEST_CASE("two-level non-adiabaticity limits") {
  const auto& mgh = lookup("MgH+");
  const double E = eV(1.0);
  // small chi_D
  const ChiParameters far = chi_parameters(mgh, E, 5e4);
  REQUIRE(far.chi_D < 1e-3);
  CHECK(nonadiabaticity_2level(mgh, E, 5e4) ==
        doctest::Approx(far.chi_D / (4.0 * std::sqrt(3.0) * far.kappa)).epsilon(1e-6));
  // maximum over b where chi_D = 2 sqrt3
  double lo = 0.0, hi = 1e4;
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (nonadiabaticity_2level(mgh, E, m1) < nonadiabaticity_2level(mgh, E, m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  CHECK(chi_parameters(mgh, E, 0.5 * (lo + hi)).chi_D == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-6));
  // evaluating the time-resolved measure at tau/2 gives the closed form
  const double tau = lorentzian_tau(E, mgh.mu);
  for (double b : {0.0, 50.0, 400.0}) {
    CHECK(nonadiabaticity_2level_at(mgh, E, b, 0.5 * tau) ==
          doctest::Approx(nonadiabaticity_2level(mgh, E, b)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(nonadiabaticity_2level(lookup("N2+"), E, 0.0), ConfigError);
}

TEST_CASE("weak-field two-level measure peaks at tau / (2 sqrt3), not tau / 2") {
  const auto& mgh = lookup("MgH+");
  const double E = eV(1.0), b = 5e4;
  const double tau = lorentzian_tau(E, mgh.mu);
  double best_t = 0.0, best = 0.0;
  for (int i = 1; i <= 20000; ++i) {
    const double t = tau * i / 20000.0;
    const double v = nonadiabaticity_2level_at(mgh, E, b, t);
    if (v > best) best = v, best_t = t;
  }
  CHECK(best_t == doctest::Approx(tau / (2.0 * std::sqrt(3.0))).epsilon(1e-3));
  CHECK(best > nonadiabaticity_2level_at(mgh, E, b, 0.5 * tau));
}

TEST_CASE("exact non-adiabaticity") {
  const auto& mgh = lookup("MgH+");
  // closest approach of a head-on collision: dH/dt = 0
  const auto at_rest = nonadiabaticity_exact(mgh, eV(1.0), 0.0, 0.0);
  CHECK(at_rest.eta_10 == 0.0);
  CHECK(at_rest.eta_manifold == 0.0);
  // linear in the ramp of the coupling D eps(t) for weak coupling
  CollisionSystem half = mgh;
  half.molecule.D *= 0.5;
  const double t = 0.4 * lorentzian_tau(eV(1.0), mgh.mu);
  const double a = nonadiabaticity_exact(mgh, eV(1.0), 2e3, t).eta_manifold;
  const double h = nonadiabaticity_exact(half, eV(1.0), 2e3, t).eta_manifold;
  CHECK(a / h == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(nonadiabaticity_exact(mgh, eV(1.0), 2e3, t).gap_10 == doctest::Approx(2.0 * mgh.molecule.B).epsilon(1e-3));
}

TEST_CASE("HD+ at 1 eV: twice the two-level estimate bounds the excitation") {
  const auto& hd = lookup("HD+");
  for (double b : {0.0, 5.0, 15.0, 40.0, 120.0, 400.0}) {
    const double exc = propagate_collision(hd, eV(1.0), b).excitation;
    CAPTURE(b);
    CHECK(2.0 * nonadiabaticity_2level(hd, eV(1.0), b) >= exc);
  }
}

TEST_CASE("accumulated first-order excitation") {
  const EnergySchedule s(eV(1.5), eV(0.1), eV(0.05));
  CHECK(pt_cycle_excitation(lookup("N2+"), 1e5, s, KappaFit::tabulated()) < 0.05);
  const EnergySchedule low(eV(0.4), eV(0.1), eV(0.05));
  CHECK(pt_cycle_excitation(lookup("I2+"), 1e5, low, KappaFit::tabulated()) > 0.03);
  CollisionSystem bare = lookup("N2+");
  bare.molecule.Q_Z = 0.0;
  CHECK(pt_cycle_excitation(bare, 1e5, s, KappaFit::tabulated()) == 0.0);
}

TEST_CASE("fitted and estimated kappa parameters give the same accumulated excitation") {
  for (const std::string name : {"N2+", "H2+", "I2+"}) {
    for (double Ei : {0.5, 1.0, 1.5, 2.0, 2.5}) {
      const EnergySchedule s(eV(Ei), eV(0.1), eV(0.05));
      const double fit = pt_cycle_excitation(lookup(name), 1e5, s, KappaFit::tabulated());
      const double est = pt_cycle_excitation(lookup(name), 1e5, s, KappaFit::estimated());
      CAPTURE(name);
      CAPTURE(Ei);
      CHECK(std::abs(est / fit - 1.0) < 0.10);
    }
  }
}

}
