#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "rotcool/estimators.hpp"
#include "rotcool/kinematics.hpp"
#include "rotcool/molecule.hpp"
#include "rotcool/rotor.hpp"

namespace rotcool {

// full: numerical propagation; pt: first-order |c_20|^2 (apolar);
// eta2l: 2 eta^2L_10 as a per-collision bound (polar).
enum class Engine { full, pt, eta2l };
Engine parse_engine(std::string_view s);
std::string_view engine_name(Engine e);

struct AveragingRule {
  int nodes = 24;
  // full engine only: b beyond the point where the peak coupling falls below
  // chi_cut * min(1, chi(b=0)) contributes nothing
  double chi_cut = 1e-4;
};

struct CycleOptions {
  Engine engine = Engine::full;
  AveragingRule rule{};
  PropagationOptions propagation{};
  // pt engine: exact I(kappa) unless a fit is supplied
  std::optional<KappaFit> fit;
  int jobs = 1;
};

// Starting J_max of the full engine when none is given. Most b-nodes sit at
// weak coupling, so the sweep starts small and relies on shell escalation.
int cycle_start_J(const CollisionSystem& system);

// Single-collision excitation at (E, b) under the chosen engine.
double collision_excitation(const CollisionSystem& system, double E, double b,
                            const CycleOptions& opts);

// b where the relevant peak coupling (chi_D polar, max(chi_Q, chi_alpha)
// apolar) has dropped to `ratio` of its head-on value.
double coupling_cutoff(const CollisionSystem& system, double E, double ratio);

struct AveragedExcitation {
  double value = 0.0;
  double b_cap = 0.0;  // 0 when the full support is used
  std::vector<double> b, w, eps;
};
// E is the CM energy; the pdf uses the matching lab energy.
AveragedExcitation average_excitation(const CollisionSystem& system, const TrapScenario& scenario,
                                      double E, const CycleOptions& opts);

struct CycleBin {
  double E_lo = 0.0, E_hi = 0.0;           // CM, Hartree
  double E_lab_hi = 0.0;
  double n_upper = 0.0, n_lower = 0.0, n_mean = 0.0;
  double eps_upper = 0.0, eps_lower = 0.0, eps_mean = 0.0;
  double sigma_cum_upper = 0.0, sigma_cum_lower = 0.0, sigma_cum_mean = 0.0;
  double product_cum = 0.0;  // 1 - prod (1 - eps_mean)^n_mean up to this bin
  double T_cum = 0.0;        // a.u.
};

struct CycleResult {
  Engine engine = Engine::full;
  std::vector<CycleBin> bins;  // ascending in energy
  double sigma_upper = 0.0, sigma_lower = 0.0, sigma_mean = 0.0;
  double product = 0.0;
  double T_total = 0.0;
};

// Runs the schedule (CM energies) from E_final up to E_init. Collision counts
// use the CM energy in the mean-loss formulas.
CycleResult accumulate(const CollisionSystem& system, const TrapScenario& scenario,
                       const EnergySchedule& schedule, const CycleOptions& opts);

// Same accumulation from precomputed edge averages (size schedule.size() + 1).
CycleResult accumulate_from_edges(const CollisionSystem& system, const TrapScenario& scenario,
                                  const EnergySchedule& schedule,
                                  const std::vector<double>& edge_eps, Engine engine);

// Lowest E_init (CM, Hartree) at which the cumulative sum reaches `level`,
// linearly interpolated between bin edges; NaN if it never does.
double crossing_energy(const CycleResult& result, double level, BinPoint point = BinPoint::mean);

// Runs tasks 0..count-1 on `jobs` threads; results land by index. The first
// failing index (lowest) is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace rotcool
