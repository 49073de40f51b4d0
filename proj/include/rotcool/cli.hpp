#pragma once

#include <iosfwd>
#include <limits>
#include <string>

#include "rotcool/molecule.hpp"

namespace rotcool::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3 };

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Everything a subcommand can be told, in user units. Unset doubles are NaN
// and get subcommand-specific defaults when resolved.
struct RunConfig {
  std::string subcommand;
  std::string target;  // reproduce only
  std::string system = "MgH+";

  // scenario: at most one of (d_um, d_bohr) or trap_hz
  double d_um = kUnset;
  double d_bohr = kUnset;
  double trap_hz = kUnset;

  // schedule, eV (lab for cooling-time, CM elsewhere)
  double E_init_eV = kUnset;
  double E_final_eV = kUnset;
  double dE_eV = kUnset;
  std::string point = "mean";

  // single collision
  double E_eV = kUnset;
  double b_bohr = kUnset;
  int samples = 401;

  // estimate sweeps
  std::string scan = "b";
  double b_min_bohr = 0.5;
  double b_max_bohr = 2000.0;
  double E_min_eV = 0.1;
  double E_max_eV = 2.5;
  int points = 60;
  bool with_full = false;

  // engines and tolerances
  std::string engine = "full";
  int nodes = 24;
  double chi_cut = 1e-4;
  std::string field_model = "exact";
  std::string polarizability = "full";
  int J_max = 0;
  double rtol = 1e-11;
  double atol = 1e-13;
  std::string fit = "none";  // none | tabulated | refit
  int kappa_points = 400;
  double kappa_cutoff = 1e-6;

  std::string output;
  std::string output_dir = ".";
  std::string summary;
  std::string defaults;
  int jobs = 1;
  bool dry_run = false;
};

// --system accepts a registry name or a molecule definition file.
CollisionSystem resolve_system(const RunConfig& cfg);
// Crystal spacing or trap frequency; `default_d_bohr` applies when neither is given.
TrapScenario resolve_scenario(const RunConfig& cfg, double default_d_bohr);

// Parses argv, runs one subcommand, returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rotcool::cli
