#include <cmath>
#include <complex>
#include <functional>

#include <doctest.h>

#include "oracles.hpp"
#include "rotcool/errors.hpp"
#include "rotcool/estimators.hpp"
#include "rotcool/rotor.hpp"
#include "rotcool/units.hpp"

using namespace rotcool;

namespace {

double eV(double x) { return units::eV_to_hartree(x); }

PropagationOptions lorentz_quadrupole_only() {
  PropagationOptions o;
  o.field_model = FieldModel::lorentzian;
  o.polarizability = PolarizabilityTerm::none;
  return o;
}

// Explicit interaction energy for a molecular axis at (theta, phi) and a
// field of magnitude eps along beta in the xz plane.
double interaction(const MoleculeSpec& m, double eps, double beta, double th, double ph) {
  const double c = std::cos(beta) * std::cos(th) + std::sin(beta) * std::sin(th) * std::cos(ph);
  if (m.polarity == Polarity::polar) return -m.D * eps * c;
  return -0.25 * eps * eps * (m.delta_alpha * c * c + m.alpha_perp.value_or(0.0)) +
         0.25 * m.Q_Z * std::pow(eps, 1.5) * (3.0 * c * c + 1.0);
}

// First-order |2,m> population with the field direction following beta(t),
// quadrupole coupling only, trapezoid rule in time.
double rotating_first_order(const CollisionSystem& sys, double E, double b, bool fixed_axis) {
  const auto field = CollisionField::make(E, b, sys.mu, FieldModel::lorentzian);
  std::array<std::array<double, 3>, 5> ang{};  // <2,m| {cos^2, 2 cos sin cos phi, sin^2 cos^2 phi} |0,0>
  const std::array<std::function<double(double, double)>, 3> parts{
      [](double th, double) { return std::cos(th) * std::cos(th); },
      [](double th, double ph) { return 2.0 * std::cos(th) * std::sin(th) * std::cos(ph); },
      [](double th, double ph) { return std::pow(std::sin(th) * std::cos(ph), 2); }};
  for (int m = -2; m <= 2; ++m)
    for (int k = 0; k < 3; ++k) ang[m + 2][k] = oracle::sphere_element(parts[k], 2, m, 0, 0).real();

  const double T = field.t_max(), B = sys.molecule.B;
  const int N = 200000;
  std::array<std::complex<double>, 5> c{};
  for (int i = 0; i <= N; ++i) {
    const double t = -T + 2.0 * T * i / N;
    const double w = (i == 0 || i == N) ? 0.5 : 1.0;
    const auto p = field.at(t);
    const double beta = fixed_axis ? 0.0 : p.beta;
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double strength = 0.75 * sys.molecule.Q_Z * std::pow(p.eps, 1.5);
    const std::complex<double> phase = std::polar(1.0, 6.0 * B * t);
    for (int m = 0; m < 5; ++m) {
      const double v = cb * cb * ang[m][0] + cb * sb * ang[m][1] + sb * sb * ang[m][2];
      c[m] += w * strength * v * phase;
    }
  }
  double P = 0.0;
  for (const auto& x : c) P += std::norm(x * (2.0 * T / N));
  return P;
}

}  // namespace

TEST_SUITE("rotor_quantum") {

TEST_CASE("free rotor Hamiltonian is diagonal") {
  const CouplingMatrices cm(RotorBasis(6));
  const auto& mol = lookup("N2+").molecule;
  const Eigen::MatrixXd H = build_hamiltonian(mol, cm, 0.0, 0.7);
  for (std::size_t i = 0; i < cm.size(); ++i) {
    const auto [J, m] = cm.basis().quantum_numbers(i);
    for (std::size_t j = 0; j < cm.size(); ++j) {
      CHECK(H(i, j) == (i == j ? mol.B * J * (J + 1) : 0.0));
    }
  }
}

TEST_CASE("Hamiltonian elements match the explicit interaction on the sphere") {
  const CouplingMatrices cm(RotorBasis(3));
  for (const char* name : {"MgH+", "N2+", "H2+"}) {
    const auto& mol = lookup(name).molecule;
    for (auto [eps, beta] : {std::pair{2e-3, 0.0}, std::pair{7e-4, 1.1}, std::pair{1e-2, 2.9}}) {
      const Eigen::MatrixXd H = build_hamiltonian(mol, cm, eps, beta);
      for (std::size_t i = 0; i < cm.size(); ++i) {
        const auto [Jp, mp] = cm.basis().quantum_numbers(i);
        for (std::size_t j = 0; j < cm.size(); ++j) {
          const auto [J, m] = cm.basis().quantum_numbers(j);
          const double ref =
              oracle::sphere_element([&](double th, double ph) { return interaction(mol, eps, beta, th, ph); },
                                     Jp, mp, J, m)
                  .real() +
              (i == j ? mol.B * J * (J + 1) : 0.0);
          CHECK(std::abs(H(i, j) - ref) < 1e-12 * (1.0 + std::abs(ref)) + 1e-16);
        }
      }
    }
  }
}

TEST_CASE("Hamiltonian is exactly symmetric along a trajectory") {
  const CouplingMatrices cm(RotorBasis(10));
  for (const char* name : {"HD+", "N2+"}) {
    const auto& sys = lookup(name);
    const auto field = CollisionField::make(eV(1.0), 25.0, sys.mu, FieldModel::exact);
    for (double f : {-0.8, -0.01, 0.0, 0.003, 0.5}) {
      const Eigen::MatrixXd H = build_hamiltonian(sys, cm, field, f * field.t_max());
      CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("head-on polar coupling is block diagonal in m") {
  const CouplingMatrices cm(RotorBasis(6));
  const Eigen::MatrixXd H = build_hamiltonian(lookup("MgH+").molecule, cm, 3e-3, 0.0);
  for (std::size_t i = 0; i < cm.size(); ++i)
    for (std::size_t j = 0; j < cm.size(); ++j)
      if (cm.basis().quantum_numbers(i).second != cm.basis().quantum_numbers(j).second) CHECK(H(i, j) == 0.0);
}

TEST_CASE("interaction-strength ratios") {
  const auto& mgh = lookup("MgH+");
  for (double e : {0.5, 1.0, 2.0}) {
    const auto c = chi_parameters(mgh, eV(e), 0.0);
    CHECK(c.chi_Q / c.chi_D == doctest::Approx(0.013 * e).epsilon(0.01));
  }
  const auto c = chi_parameters(lookup("N2+"), eV(2.0), 0.0);
  CHECK(c.chi_Q / c.chi_alpha == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("default basis sizes") {
  CHECK(default_J_max(lookup("MgH+")) == 16);
  CHECK(default_J_max(lookup("H2+")) == 8);
}

TEST_CASE("norm is conserved without renormalisation") {
  struct Case {
    const char* name;
    double E_eV, b;
  };
  for (const Case& c : {Case{"MgH+", 1.0, 0.0}, Case{"MgH+", 2.0, 30.0}, Case{"HD+", 1.0, 0.0},
                        Case{"HD+", 1.0, 40.0}, Case{"N2+", 2.0, 10.0}, Case{"H2+", 2.5, 0.0}}) {
    const auto r = propagate_collision(lookup(c.name), eV(c.E_eV), c.b);
    CAPTURE(c.name);
    CAPTURE(c.b);
    CHECK(r.norm_drift < 1e-8);
    CHECK(r.excitation == doctest::Approx(1.0 - r.ground_population).epsilon(1e-6));
  }
}

TEST_CASE("head-on polar collision never leaves m = 0") {
  const auto& sys = lookup("MgH+");
  PropagationOptions o;
  o.reflection_symmetry = false;
  o.J_max = 16;
  o.escalate = false;
  const auto field = CollisionField::make(eV(1.5), 0.0, sys.mu, FieldModel::exact);
  const RotorState start = RotorState::ground(16);
  for (double t1 : {0.0, field.t_max()}) {
    const auto r = propagate(sys, field, start, -field.t_max(), t1, o);
    double off = 0.0;
    for (int J = 1; J <= 16; ++J)
      for (int m = -J; m <= J; ++m)
        if (m != 0) off += r.final_state.population(J, m);
    CHECK(off < 1e-12);
    CHECK(r.excitation > 1e-4);
  }
}

TEST_CASE("reflection-even subspace reproduces the full basis") {
  const auto& sys = lookup("HD+");
  PropagationOptions even, full;
  even.J_max = full.J_max = 10;
  full.reflection_symmetry = false;
  const auto a = propagate_collision(sys, eV(1.0), 30.0, even);
  const auto b = propagate_collision(sys, eV(1.0), 30.0, full);
  CHECK(a.excitation == doctest::Approx(b.excitation).epsilon(1e-6));
  const auto pa = a.final_state.shell_populations(), pb = b.final_state.shell_populations();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t J = 0; J < pa.size(); ++J) CHECK(std::abs(pa[J] - pb[J]) < 1e-9);
}

TEST_CASE("no coupling, no excitation") {
  MoleculeSpec inert = lookup("H2+").molecule;
  inert.delta_alpha = 0.0;
  inert.alpha_perp = 0.0;
  inert.Q_Z = 0.0;
  const CollisionSystem sys = CollisionSystem::from_masses(inert, "Be+", lookup("H2+").M_atom);
  const auto r = propagate_collision(sys, eV(1.0), 0.0);
  CHECK(r.excitation == 0.0);
  CHECK(r.ground_population == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward then backward propagation returns to the ground state") {
  const auto& sys = lookup("HD+");
  PropagationOptions o;
  o.J_max = 12;
  const auto field = CollisionField::make(eV(1.0), 20.0, sys.mu, FieldModel::exact);
  const auto fwd = propagate(sys, field, RotorState::ground(12), -field.t_max(), field.t_max(), o);
  REQUIRE(fwd.excitation > 1e-3);
  const auto back = propagate(sys, field, fwd.final_state, field.t_max(), -field.t_max(), o);
  CHECK(1.0 - back.ground_population < 1e-8);
}

TEST_CASE("doubling the basis changes the excitation by less than 1%") {
  for (auto [name, E, b] : {std::tuple{"MgH+", 2.0, 0.0}, std::tuple{"HD+", 1.0, 30.0}, std::tuple{"N2+", 2.5, 5.0}}) {
    const auto& sys = lookup(name);
    PropagationOptions small, big;
    small.J_max = default_J_max(sys);
    big.J_max = 2 * small.J_max;
    big.escalate = false;
    const double a = propagate_collision(sys, eV(E), b, small).excitation;
    const double c = propagate_collision(sys, eV(E), b, big).excitation;
    CAPTURE(name);
    CHECK(std::abs(a / c - 1.0) < 0.01);
  }
}

TEST_CASE("basis escalation kicks in when the top shells fill") {
  PropagationOptions o;
  o.J_max = 4;
  const auto r = propagate_collision(lookup("MgH+"), eV(2.0), 0.0, o);
  CHECK(r.J_max > 4);
  CHECK(r.top_shell_peak <= o.shell_threshold);
}

TEST_CASE("weak quadrupole coupling follows first-order theory") {
  CollisionSystem weak = lookup("H2+");
  weak.molecule.Q_Z *= 0.01;
  weak.molecule.delta_alpha = 0.0;
  for (double e : {0.8, 1.5}) {
    const double full = propagate_collision(weak, eV(e), 0.0, lorentz_quadrupole_only()).excitation;
    const double pt = pt_amplitude(weak, eV(e), 0.0).probability();
    CHECK(full == doctest::Approx(pt).epsilon(0.01));
  }
}

TEST_CASE("H2+ at small energy follows first-order theory within 10%") {
  const auto& sys = lookup("H2+");
  const double full = propagate_collision(sys, eV(0.4), 0.0, lorentz_quadrupole_only()).excitation;
  const double pt = pt_amplitude(sys, eV(0.4), 0.0).probability();
  CHECK(full == doctest::Approx(pt).epsilon(0.10));
}

TEST_CASE("off-axis collisions follow first order with a rotating field direction") {
  const auto& sys = lookup("H2+");
  const double E = eV(1.1);
  for (double b : {50.0, 200.0}) {
    const double rotating = rotating_first_order(sys, E, b, false);
    const double fixed = rotating_first_order(sys, E, b, true);
    const double full = propagate_collision(sys, E, b, lorentz_quadrupole_only()).excitation;
    CAPTURE(b);
    CHECK(fixed == doctest::Approx(pt_amplitude(sys, E, b).probability()).epsilon(1e-3));
    CHECK(full == doctest::Approx(rotating).epsilon(0.03));
  }
}

TEST_CASE("HD+ at 1 eV is suppressed head-on and peaks at intermediate b") {
  const auto& sys = lookup("HD+");
  const double head_on = propagate_collision(sys, eV(1.0), 0.0).excitation;
  double peak = 0.0;
  for (double b : {5.0, 10.0, 20.0, 40.0}) peak = std::max(peak, propagate_collision(sys, eV(1.0), b).excitation);
  const double far = propagate_collision(sys, eV(1.0), 400.0).excitation;
  CHECK(head_on < 0.5 * peak);
  CHECK(far < 0.5 * peak);
}

TEST_CASE("H2+ head-on alignment is transient") {
  const auto& sys = lookup("H2+");
  PropagationOptions o;
  const auto field = CollisionField::make(eV(1.0), 0.0, sys.mu, o.field_model);
  const double tau = field.geometry().tau;
  for (int i = 0; i <= 400; ++i) o.trace_times.push_back(3.0 * tau * (-1.0 + i / 200.0));
  const auto r = propagate_collision(sys, eV(1.0), 0.0, o);
  double peak = 0.0;
  for (const auto& PJ : r.trace_PJ) peak = std::max(peak, 1.0 - PJ[0]);
  // peak ~4.7e-4, final ~2.5e-6
  CHECK(peak > 1e-4);
  CHECK(r.excitation < 1e-2 * peak);
}

TEST_CASE("missing alpha_perp is an error only when the full polarizability is requested") {
  const auto& i2 = lookup("I2+");
  PropagationOptions o;
  o.J_max = 4;
  o.escalate = false;
  CHECK_THROWS_AS(propagate_collision(i2, eV(0.3), 50.0, o), ConfigError);
  o.polarizability = PolarizabilityTerm::anisotropic;
  CHECK_NOTHROW(propagate_collision(i2, eV(0.3), 50.0, o));
}

TEST_CASE("integrator failures are reported with the collision") {
  PropagationOptions o;
  o.rtol = 1e-30;
  o.atol = 1e-300;
  CHECK_THROWS_WITH_AS(propagate_collision(lookup("HD+"), eV(1.0), 3.0, o),
                       doctest::Contains("b=3 Bohr"), NumericalError);
}

}
