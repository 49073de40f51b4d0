#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "rotcool/errors.hpp"
#include "rotcool/molecule.hpp"
#include "rotcool/units.hpp"

using namespace rotcool;
using units::Unit;

TEST_SUITE("core_params") {

TEST_CASE("one electronvolt in Hartree") {
  CHECK(units::convert(1.0, Unit::eV, Unit::Hartree) == doctest::Approx(0.036749322).epsilon(1e-8));
}

TEST_CASE("5.29 micrometre crystal spacing is about 1e5 Bohr") {
  const double d = units::convert(5.29, Unit::um, Unit::Bohr);
  CHECK(d == doctest::Approx(1.0e5).epsilon(0.01));
}

TEST_CASE("unit round trips are exact to rounding") {
  const std::vector<std::pair<Unit, Unit>> pairs{{Unit::eV, Unit::Hartree},
                                                 {Unit::um, Unit::Bohr},
                                                 {Unit::s, Unit::au_time},
                                                 {Unit::ms, Unit::au_time},
                                                 {Unit::Hz, Unit::au_angular_frequency}};
  for (const auto& [a, b] : pairs) {
    for (double x : {1e-7, 0.37, 2.0, 5.29, 1e6}) {
      const double back = units::convert(units::convert(x, a, b), b, a);
      CHECK(std::abs(back - x) <= 4e-16 * x);
    }
  }
}

TEST_CASE("unit pairs across dimensions are rejected") {
  CHECK_THROWS_AS(units::convert(1.0, Unit::eV, Unit::Bohr), std::invalid_argument);
  CHECK_THROWS_AS(units::parse_unit("furlong"), std::invalid_argument);
  CHECK(units::parse_unit("Ha") == Unit::Hartree);
}

TEST_CASE("registry holds the five tabulated systems digit for digit") {
  const auto& mgh = lookup("MgH+");
  CHECK(mgh.molecule.B == 2.88e-5);
  CHECK(mgh.molecule.D == 1.18);
  CHECK(mgh.molecule.Q_Z == 0.562);
  CHECK(mgh.mu == 22473.21);
  CHECK(mgh.is_polar());
  CHECK(mgh.coolant == "Mg+");

  const auto& hd = lookup("HD+");
  CHECK(hd.molecule.B == 9.96e-5);
  CHECK(hd.molecule.D == 0.34);
  CHECK(hd.molecule.Q_Z == 1.39);
  CHECK(hd.mu == 4155.36);

  const auto& n2 = lookup("N2+");
  CHECK(n2.molecule.B == 0.90e-5);
  CHECK(n2.molecule.delta_alpha == 9.12);
  CHECK(n2.molecule.alpha_perp.value() == 9.62);
  CHECK(n2.molecule.Q_Z == 1.741);
  CHECK(n2.mu == 32463.57);
  CHECK_FALSE(n2.is_polar());

  const auto& h2 = lookup("H2+");
  CHECK(h2.molecule.B == 12.69e-5);
  CHECK(h2.molecule.delta_alpha == 3.72);
  CHECK(h2.molecule.alpha_perp.value() == 1.71);
  CHECK(h2.molecule.Q_Z == 1.39);
  CHECK(h2.mu == 3024.57);

  const auto& i2 = lookup("I2+");
  CHECK(i2.molecule.B == 0.015e-5);
  CHECK(i2.molecule.delta_alpha == 55.64);
  CHECK_FALSE(i2.molecule.alpha_perp.has_value());
  CHECK(i2.molecule.Q_Z == 11.211);
  CHECK(i2.mu == 74056.55);

  CHECK(builtin_registry().size() == 5);
}

TEST_CASE("missing alpha_perp fails loudly but the system stays usable") {
  const auto& i2 = lookup("I2+");
  CHECK_NOTHROW(i2.molecule.validate());
  CHECK_THROWS_WITH_AS(i2.molecule.require_alpha_perp(), doctest::Contains("I2+"), ConfigError);
}

TEST_CASE("tabulated reduced masses agree with the isotope masses within 1%") {
  for (const auto& s : builtin_registry()) {
    CAPTURE(s.name());
    CHECK(std::abs(s.mu_discrepancy()) < 0.01);
    CHECK(s.xi == doctest::Approx(s.molecule.M_mol / s.M_atom).epsilon(1e-15));
  }
}

TEST_CASE("lookup is case-insensitive and rejects unknown names") {
  CHECK(lookup("mgh").name() == "MgH+");
  CHECK(lookup("n2+").name() == "N2+");
  CHECK_THROWS_AS(lookup("CO+"), ConfigError);
}

TEST_CASE("a mu far from the masses triggers a warning") {
  std::vector<std::string> seen;
  set_warning_handler([&](std::string_view m) { seen.emplace_back(m); });
  const auto& base = lookup("HD+");
  CollisionSystem::with_tabulated_mu(base.molecule, "Be+", base.M_atom, base.mu * 1.05);
  set_warning_handler(nullptr);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].find("HD+") != std::string::npos);
}

TEST_CASE("molecule definition files") {
  std::istringstream in(
      "# CaH+ guess\n"
      "name = CaH+\nB_au = 2.1e-5\nD_au = 2.0\nQZ_au = 1.0\n"
      "Mmol_me = 74900\nMatom_me = 72860\n");
  const CollisionSystem s = parse_system_definition(in);
  CHECK(s.name() == "CaH+");
  CHECK(s.is_polar());
  CHECK(s.mu == doctest::Approx(74900.0 * 72860.0 / (74900.0 + 72860.0)));

  std::istringstream bad("name = X\nB_au = -1\nMmol_me = 10\nMatom_me = 10\n");
  CHECK_THROWS_AS(parse_system_definition(bad), ConfigError);
  std::istringstream unknown("name = X\nBee = 1\n");
  CHECK_THROWS_AS(parse_system_definition(unknown), ConfigError);
}

TEST_CASE("scenarios must be physical") {
  CHECK_THROWS_AS(validate(TrapScenario{CoulombCrystal{0.0}}), ConfigError);
  CHECK_THROWS_AS(validate(TrapScenario{SingleAtomTrap{-1.0}}), ConfigError);
  CHECK_NOTHROW(validate(TrapScenario{CoulombCrystal{1e5}}));
}

}
