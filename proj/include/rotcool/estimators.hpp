#pragma once

#include <complex>
#include <span>
#include <vector>

#include "rotcool/kinematics.hpp"
#include "rotcool/molecule.hpp"
#include "rotcool/rotor.hpp"

namespace rotcool {

// Peak interaction strengths over the rotational constant, and kappa = tau B.
struct ChiParameters {
  double chi_D = 0.0;
  double chi_alpha = 0.0;
  double chi_Q = 0.0;
  double kappa = 0.0;
};
ChiParameters chi_parameters(const CollisionSystem& system, double E, double b);
double kappa(const MoleculeSpec& molecule, double mu, double E);

// Instantaneous non-adiabaticity <i'|dH/dt|0> / (E_i' - E_0)^2 of the polar
// Hamiltonian along the trajectory.
struct NonadiabaticityOptions {
  int J_max = 12;
  FieldModel field_model = FieldModel::exact;
  // gaps below this (in units of B) are reported as degenerate
  double min_gap = 1e-6;
};
struct Nonadiabaticity {
  double eta_10 = 0.0;        // lowest excited eigenstate only
  // quadrature sum over the three states adiabatically connected to J = 1;
  // insensitive to how a (near-)degenerate pair is resolved
  double eta_manifold = 0.0;
  double gap_10 = 0.0;        // E_1 - E_0
};
Nonadiabaticity nonadiabaticity_exact(const CollisionSystem& system, const CollisionField& field,
                                      double t, const NonadiabaticityOptions& opts = {});
Nonadiabaticity nonadiabaticity_exact(const CollisionSystem& system, double E, double b, double t,
                                      const NonadiabaticityOptions& opts = {});
// Largest eta_manifold over t in (0, t_max] sampled on a log grid.
double peak_nonadiabaticity(const CollisionSystem& system, double E, double b,
                            const NonadiabaticityOptions& opts = {}, int samples = 200);

// Two-level estimate with the field evaluated at t = tau/2.
double nonadiabaticity_2level(const CollisionSystem& system, double E, double b);
// Time-resolved two-level measure for the Lorentzian field:
// (D |eps'(t)| / sqrt3) / gap(t)^2 with gap^2 = 4B^2 + (2 D eps(t) / sqrt3)^2.
double nonadiabaticity_2level_at(const CollisionSystem& system, double E, double b, double t);

// I(kappa) = int_{-pi/2}^{pi/2} cos u exp(i 3 kappa tan u) du
struct KappaIntegral {
  std::complex<double> value;
  double norm2() const { return std::norm(value); }
};
KappaIntegral kappa_integral(double kappa);
// Same quantity from the time-domain form
// (tau/2)^2 int exp(i 6 B t) / (t^2 + (tau/2)^2)^{3/2} dt, evaluated with an
// independent Fourier quadrature.
KappaIntegral kappa_integral_time(double kappa);

// f(kappa) = 2 (1 + a1 kappa)^a2 exp(-a3 kappa)
struct KappaFit {
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;

  static KappaFit tabulated();  // least-squares values (6.83, 0.40, 2.93)
  static KappaFit estimated();  // physical estimate (6.0, 0.5, 3.0)
  double operator()(double kappa) const;
  // |f|^2 = 4 (1 + a1 kappa)^{2 a2} exp(-2 a3 kappa)
  double squared(double kappa) const;
};

// kappa range spanned by E in [E_lo, E_hi] over the given systems.
std::pair<double, double> kappa_range(std::span<const CollisionSystem> systems, double E_lo,
                                      double E_hi);
// Uniform grid from the registry kappa range (E in 0.05..10 eV), cut where
// I(kappa) has decayed below `cutoff`.
std::vector<double> default_kappa_grid(std::size_t points = 400, double cutoff = 1e-6);
// Nonlinear least squares of f to I(kappa) on the grid, starting from the
// estimated parameters.
KappaFit fit_kappa(std::span<const double> kappa_grid);

// First-order amplitude of |2,0> after one collision, Lorentzian field.
struct PtAmplitude {
  std::complex<double> c;
  double probability() const { return std::norm(c); }
};
PtAmplitude pt_amplitude(const CollisionSystem& system, double E, double b);

// b-average of chi_Q^2 over the crystal pdf.
struct ChiQ2Average {
  double closed_form = 0.0;  // (3 Q_Z / 4 B)^2 (3 / (10 b_max^2)) E^4
  double quadrature = 0.0;   // direct integral up to b_max
};
ChiQ2Average averaged_chiQ2(const CollisionSystem& system, double E, double d);

// Accumulated first-order excitation with the fitted kappa dependence.
// Energies are the schedule's (CM) energies; each bin is evaluated at `point`.
double pt_cycle_excitation(const CollisionSystem& system, double d, const EnergySchedule& schedule,
                           const KappaFit& fit, BinPoint point = BinPoint::upper);

}  // namespace rotcool
