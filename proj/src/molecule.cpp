#include "rotcool/molecule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <mutex>
#include <sstream>

#include "rotcool/errors.hpp"
#include "rotcool/units.hpp"

namespace rotcool {

namespace {

std::mutex warning_mutex;
WarningHandler& handler_slot() {
  static WarningHandler handler;
  return handler;
}

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex);
  handler_slot() = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(warning_mutex);
  if (handler_slot()) {
    handler_slot()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

void MoleculeSpec::validate() const {
  if (!(B > 0.0)) throw ConfigError("molecule '" + name + "': B must be positive");
  if (!(M_mol > 0.0)) throw ConfigError("molecule '" + name + "': mass must be positive");
  if (polarity == Polarity::polar && !(D > 0.0)) {
    throw ConfigError("molecule '" + name + "': polar molecule needs D > 0");
  }
  if (polarity == Polarity::apolar && D != 0.0) {
    throw ConfigError("molecule '" + name + "': apolar molecule must have D = 0");
  }
  if (delta_alpha < 0.0 || Q_Z < 0.0 || (alpha_perp && *alpha_perp < 0.0)) {
    throw ConfigError("molecule '" + name + "': negative polarizability or quadrupole");
  }
}

double MoleculeSpec::require_alpha_perp() const {
  if (!alpha_perp) {
    throw ConfigError("molecule '" + name +
                      "': perpendicular polarizability is not available; disable the "
                      "polarizability term");
  }
  return *alpha_perp;
}

CollisionSystem CollisionSystem::from_masses(MoleculeSpec molecule, std::string coolant,
                                             double M_atom) {
  molecule.validate();
  if (!(M_atom > 0.0)) throw ConfigError("coolant mass must be positive");
  CollisionSystem s;
  s.molecule = std::move(molecule);
  s.coolant = std::move(coolant);
  s.M_atom = M_atom;
  s.mu = s.mass_derived_mu();
  s.xi = s.molecule.M_mol / M_atom;
  return s;
}

CollisionSystem CollisionSystem::with_tabulated_mu(MoleculeSpec molecule, std::string coolant,
                                                   double M_atom, double mu) {
  CollisionSystem s = from_masses(std::move(molecule), std::move(coolant), M_atom);
  if (!(mu > 0.0)) throw ConfigError("reduced mass must be positive");
  s.mu = mu;
  if (std::abs(s.mu_discrepancy()) > 0.01) {
    std::ostringstream msg;
    msg << s.name() << "/" << s.coolant << ": tabulated mu differs from mass-derived mu by "
        << 100.0 * s.mu_discrepancy() << "%";
    warn(msg.str());
  }
  return s;
}

double CollisionSystem::mass_derived_mu() const {
  return molecule.M_mol * M_atom / (molecule.M_mol + M_atom);
}

double CollisionSystem::mu_discrepancy() const { return mu / mass_derived_mu() - 1.0; }

void validate(const TrapScenario& scenario) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, SingleAtomTrap>) {
          if (!(s.omega > 0.0)) throw ConfigError("trap frequency must be positive");
        } else {
          if (!(s.d > 0.0)) throw ConfigError("lattice spacing must be positive");
        }
      },
      scenario);
}

namespace {

// Isotope masses in u.
constexpr double m_H = 1.00782503223;
constexpr double m_D = 2.01410177812;
constexpr double m_N14 = 14.00307400443;
constexpr double m_Mg24 = 23.985041697;
constexpr double m_Be9 = 9.0121831;
constexpr double m_Ca48 = 47.95252276;
constexpr double m_I127 = 126.9044719;

MoleculeSpec polar(std::string name, double B, double D, double QZ, double mass_u) {
  return {std::move(name), B, D, 0.0, 0.0, QZ, mass_u * units::amu_me, Polarity::polar};
}

MoleculeSpec apolar(std::string name, double B, double dalpha, std::optional<double> aperp,
                    double QZ, double mass_u) {
  return {std::move(name), B, 0.0, dalpha, aperp, QZ, mass_u * units::amu_me, Polarity::apolar};
}

std::vector<CollisionSystem> make_registry() {
  std::vector<CollisionSystem> r;
  r.push_back(CollisionSystem::with_tabulated_mu(polar("MgH+", 2.88e-5, 1.18, 0.562, m_Mg24 + m_H),
                                                 "Mg+", m_Mg24 * units::amu_me, 22473.21));
  r.push_back(CollisionSystem::with_tabulated_mu(polar("HD+", 9.96e-5, 0.34, 1.39, m_H + m_D),
                                                 "Be+", m_Be9 * units::amu_me, 4155.36));
  r.push_back(CollisionSystem::with_tabulated_mu(
      apolar("N2+", 0.90e-5, 9.12, 9.62, 1.741, 2 * m_N14), "Ca+", m_Ca48 * units::amu_me,
      32463.57));
  r.push_back(CollisionSystem::with_tabulated_mu(
      apolar("H2+", 12.69e-5, 3.72, 1.71, 1.39, 2 * m_H), "Be+", m_Be9 * units::amu_me,
      3024.57));
  // alpha_perp for I2+ is not tabulated.
  r.push_back(CollisionSystem::with_tabulated_mu(
      apolar("I2+", 0.015e-5, 55.64, std::nullopt, 11.211, 2 * m_I127), "Ca+",
      m_Ca48 * units::amu_me, 74056.55));
  return r;
}

std::string normalize_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == '+' || c == '_' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

const std::vector<CollisionSystem>& builtin_registry() {
  static const std::vector<CollisionSystem> registry = make_registry();
  return registry;
}

const CollisionSystem& lookup(std::string_view name) {
  const std::string key = normalize_name(name);
  for (const auto& s : builtin_registry()) {
    if (normalize_name(s.name()) == key) return s;
  }
  throw ConfigError("unknown molecular system '" + std::string(name) + "'");
}

CollisionSystem parse_system_definition(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
      s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
      s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
      return s;
    };
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("molecule file line " + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  static const std::set<std::string> known{"name",         "coolant", "B_au",    "D_au",    "dalpha_au",
                                            "alphaperp_au", "QZ_au",   "Mmol_me", "Matom_me"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ConfigError("molecule file: unknown key '" + key + "'");
  }

  auto number = [&](const std::string& key, std::optional<double> fallback) -> std::optional<double> {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty() || it->second == "XX" || it->second == "-") {
      return fallback;
    }
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("molecule file: bad value for '" + key + "': " + it->second);
    }
  };
  auto required = [&](const std::string& key) {
    auto v = number(key, std::nullopt);
    if (!v) throw ConfigError("molecule file: missing required key '" + key + "'");
    return *v;
  };

  MoleculeSpec m;
  m.name = kv.count("name") ? kv["name"] : "custom";
  m.B = required("B_au");
  m.D = number("D_au", 0.0).value();
  m.delta_alpha = number("dalpha_au", 0.0).value();
  m.alpha_perp = number("alphaperp_au", std::nullopt);
  m.Q_Z = number("QZ_au", 0.0).value();
  m.M_mol = required("Mmol_me");
  m.polarity = m.D > 0.0 ? Polarity::polar : Polarity::apolar;
  const double M_atom = required("Matom_me");
  std::string coolant = kv.count("coolant") ? kv["coolant"] : "atom";
  return CollisionSystem::from_masses(std::move(m), std::move(coolant), M_atom);
}

CollisionSystem load_system_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open molecule file '" + path.string() + "'");
  return parse_system_definition(in);
}

}  // namespace rotcool
