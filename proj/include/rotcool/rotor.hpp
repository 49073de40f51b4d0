#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "rotcool/angular.hpp"
#include "rotcool/molecule.hpp"
#include "rotcool/trajectory.hpp"

namespace rotcool {

// exact: field magnitude and direction from the integrated Coulomb trajectory.
// lorentzian: magnitude replaced by eps0 (tau/2)^2 / (t^2 + (tau/2)^2), direction
// still taken from the trajectory.
enum class FieldModel { exact, lorentzian };

// none: drop the -eps^2/4 (...) term; anisotropic: keep only the delta_alpha
// part; full: also the isotropic alpha_perp shift (needs alpha_perp).
enum class PolarizabilityTerm { none, anisotropic, full };

FieldModel parse_field_model(std::string_view s);
PolarizabilityTerm parse_polarizability_term(std::string_view s);

struct RotorState {
  RotorBasis basis{0};
  std::vector<std::complex<double>> amplitudes;

  static RotorState ground(int J_max);
  double norm() const;
  double population(int J, int m) const;
  // P_J summed over m, index J = 0..J_max
  std::vector<double> shell_populations() const;
};

// Field seen by the molecule during one collision: magnitude, direction and
// their rates.
class CollisionField {
 public:
  static CollisionField make(double E, double b, double mu, FieldModel model,
                             const TrajectoryOptions& opts = {});

  FieldModel model() const { return model_; }
  const CollisionGeometry& geometry() const { return trajectory_.geometry(); }
  const Trajectory& trajectory() const { return trajectory_; }
  double t_max() const { return trajectory_.t_max(); }

  struct Point {
    double eps, beta, eps_rate, beta_rate;
  };
  Point at(double t) const;

 private:
  FieldModel model_ = FieldModel::exact;
  Trajectory trajectory_;
};

// Coefficients multiplying each angular operator, plus the scalar (identity)
// part, for field magnitude eps along direction beta.
struct InteractionTerms {
  std::array<double, 5> op{};
  double identity = 0.0;
};
InteractionTerms interaction_terms(const MoleculeSpec& molecule, double eps, double beta,
                                   PolarizabilityTerm polarizability = PolarizabilityTerm::full);
// d/dt of the above given eps_rate and beta_rate.
InteractionTerms interaction_rates(const MoleculeSpec& molecule, double eps, double beta,
                                   double eps_rate, double beta_rate,
                                   PolarizabilityTerm polarizability = PolarizabilityTerm::full);

// Dense H = B J^2 + sum_k c_k O_k + identity, real symmetric.
Eigen::MatrixXd build_hamiltonian(const MoleculeSpec& molecule, const CouplingMatrices& couplings,
                                  double eps, double beta,
                                  PolarizabilityTerm polarizability = PolarizabilityTerm::full);
Eigen::MatrixXd build_hamiltonian(const CollisionSystem& system, const CouplingMatrices& couplings,
                                  const CollisionField& field, double t,
                                  PolarizabilityTerm polarizability = PolarizabilityTerm::full);

int default_J_max(const CollisionSystem& system);

struct PropagationOptions {
  int J_max = 0;  // 0 picks default_J_max
  bool escalate = true;
  int J_max_cap = 60;
  double shell_threshold = 1e-8;  // top two shells, peak over the collision
  double rtol = 1e-11;
  double atol = 1e-13;
  // step cap as a fraction of max(tau/2, |t|)
  double max_step_fraction = 0.25;
  FieldModel field_model = FieldModel::exact;
  PolarizabilityTerm polarizability = PolarizabilityTerm::full;
  // propagate in the reflection-even subspace (exact for the ground state)
  bool reflection_symmetry = true;
  TrajectoryOptions trajectory{};
  // P_J is recorded at these times when non-empty (must be ascending)
  std::vector<double> trace_times;
};

struct PropagationResult {
  RotorState final_state;
  double excitation = 0.0;          // sum of excited populations
  double ground_population = 0.0;   // |<0,0|psi>|^2
  double norm_drift = 0.0;          // | ||psi|| - 1 | at the end
  double top_shell_peak = 0.0;      // max over time of the top two J shells
  int J_max = 0;
  std::size_t steps = 0;
  std::vector<double> trace_t;
  std::vector<std::vector<double>> trace_PJ;
};

// One collision from -t_max to t_max starting in |0,0>.
PropagationResult propagate_collision(const CollisionSystem& system, double E, double b,
                                      const PropagationOptions& opts = {});

// Lower-level entry: fixed J_max (no escalation), arbitrary window and start
// state. t1 < t0 propagates backward.
PropagationResult propagate(const CollisionSystem& system, const CollisionField& field,
                            const RotorState& initial, double t0, double t1,
                            const PropagationOptions& opts);

}  // namespace rotcool
