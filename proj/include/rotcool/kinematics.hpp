#pragma once

#include <cstddef>
#include <vector>

#include "rotcool/molecule.hpp"

namespace rotcool {

// Classical Coulomb scattering (q1 q2 = 1). E is the CM scattering energy.
double scattering_angle(double E, double b);

// Lab-frame energy handed from molecule to atom in one event.
double energy_transfer(double E_lab, double xi, double theta_sc);
double max_energy_transfer(double E_lab, double xi);

double cm_to_lab(double E, const CollisionSystem& system);
double lab_to_cm(double E_lab, const CollisionSystem& system);

// Effective trap length of the single-atom scenario, sqrt(E_lab / (mu omega^2)).
double sa_sigma(double E_lab, double mu, double omega);

double impact_pdf(const TrapScenario& scenario, const CollisionSystem& system, double E_lab,
                  double b);

// Quadrature nodes/weights for b-averages, sum_i w_i g(b_i) ~ int g(b) f(b) db.
// Nodes follow b = a sinh(v) with a = 1/(2 E_scatter), the Coulomb length, so
// structure at b ~ r0 is resolved even when the support extends to 1e5 Bohr.
// b_cap truncates the support (weights then sum to the cdf at b_cap).
struct ImpactRule {
  std::vector<double> b;
  std::vector<double> w;
  double weight_sum() const;
};
ImpactRule impact_rule(const TrapScenario& scenario, const CollisionSystem& system,
                       double E_scatter, double E_lab, int nodes, double b_cap = 0.0);

// Closed-form mean lab energy loss per collision, SA or CC.
double mean_energy_loss(const TrapScenario& scenario, const CollisionSystem& system,
                        double E_lab);
// Direct b-average of energy_transfer with the scenario pdf; the passed
// energy doubles as the scattering energy, as in the closed forms.
double mean_energy_loss_quadrature(const TrapScenario& scenario, const CollisionSystem& system,
                                   double E_lab, int nodes = 400);

// Expected number of collisions to remove dE_lab at E_lab. Throws ConfigError
// if dE_lab > E_lab.
double collision_count(const TrapScenario& scenario, const CollisionSystem& system,
                       double E_lab, double dE_lab);

// pi/omega (SA) or d sqrt(mu / (2 E_lab)) (CC).
double time_between_collisions(const TrapScenario& scenario, const CollisionSystem& system,
                               double E_lab);

enum class BinPoint { upper, lower, mean };

// Bins of width dE stacked upward from E_final; the top bin is clipped to E_init.
class EnergySchedule {
 public:
  EnergySchedule(double E_init, double E_final, double dE);

  double E_init() const { return E_init_; }
  double E_final() const { return E_final_; }
  double dE() const { return dE_; }
  const std::vector<double>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size() - 1; }
  double lower(std::size_t i) const { return edges_[i]; }
  double upper(std::size_t i) const { return edges_[i + 1]; }
  double width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }
  double point(std::size_t i, BinPoint p) const;

 private:
  double E_init_, E_final_, dE_;
  std::vector<double> edges_;
};

struct CoolingBin {
  double E_lo, E_hi, E_eval;
  double n;      // expected collisions in this bin
  double tau;    // time between collisions (a.u.)
  double T_cum;  // time to cool from E_hi down to E_final (a.u.)
};

struct CoolingTimeReport {
  BinPoint point = BinPoint::mean;
  std::vector<CoolingBin> bins;
  double T_total = 0.0;  // at `point`
  double T_upper = 0.0, T_lower = 0.0, T_mean = 0.0;
};

// Schedule energies are lab-frame. Summation runs in ascending bin order.
CoolingTimeReport cooling_time(const TrapScenario& scenario, const CollisionSystem& system,
                               const EnergySchedule& schedule, BinPoint point = BinPoint::mean);

}  // namespace rotcool
