#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rotcool {

enum class Polarity { polar, apolar };

// Rigid-rotor constants of a diatomic molecular ion, atomic units.
struct MoleculeSpec {
  std::string name;
  double B = 0.0;                     // rotational constant (Hartree)
  double D = 0.0;                     // dipole moment, 0 for apolar
  double delta_alpha = 0.0;           // polarizability anisotropy
  std::optional<double> alpha_perp;   // perpendicular polarizability, may be unknown
  double Q_Z = 0.0;                   // quadrupole moment, zz component
  double M_mol = 0.0;                 // electron masses
  Polarity polarity = Polarity::apolar;

  void validate() const;
  // Throws ConfigError naming the molecule when alpha_perp is unknown.
  double require_alpha_perp() const;
};

// Molecule plus coolant atom. mu is the reduced mass actually used by all
// dynamics; registry entries carry the tabulated value.
struct CollisionSystem {
  MoleculeSpec molecule;
  std::string coolant;
  double M_atom = 0.0;
  double mu = 0.0;
  double xi = 0.0;  // M_mol / M_atom

  // mu recomputed from the two masses.
  static CollisionSystem from_masses(MoleculeSpec molecule, std::string coolant, double M_atom);
  // Tabulated mu is kept; a warning is emitted if it differs from the
  // mass-derived value by more than 1%.
  static CollisionSystem with_tabulated_mu(MoleculeSpec molecule, std::string coolant,
                                           double M_atom, double mu);

  double mass_derived_mu() const;
  // Relative deviation of mu from the mass-derived reduced mass.
  double mu_discrepancy() const;
  const std::string& name() const { return molecule.name; }
  bool is_polar() const { return molecule.polarity == Polarity::polar; }
};

struct SingleAtomTrap {
  double omega;  // angular trap frequency, atomic units
};

struct CoulombCrystal {
  double d;  // lattice spacing, Bohr
  double b_max() const { return 0.5 * d; }
};

using TrapScenario = std::variant<SingleAtomTrap, CoulombCrystal>;

void validate(const TrapScenario& scenario);

const std::vector<CollisionSystem>& builtin_registry();
// Accepts "MgH+", "HD+", "N2+", "H2+", "I2+" (case-insensitive, '+' optional).
const CollisionSystem& lookup(std::string_view name);

// key=value molecule definition: name, B_au, D_au, dalpha_au, alphaperp_au,
// QZ_au, Mmol_me, Matom_me. '#' starts a comment.
CollisionSystem parse_system_definition(std::istream& in);
CollisionSystem load_system_file(const std::filesystem::path& path);

}  // namespace rotcool
