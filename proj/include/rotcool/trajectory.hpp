#pragma once

#include <array>
#include <span>
#include <vector>

namespace rotcool {

// Width constant of the Lorentzian field model, tau = 1.86 sqrt(mu / E^3).
inline constexpr double kLorentzWidth = 1.86;

double closest_approach(double E, double b);
double lorentzian_tau(double E, double mu);

// One classical scattering event in the CM frame (atomic units).
struct CollisionGeometry {
  double E = 0.0;
  double b = 0.0;
  double mu = 0.0;
  double r0 = 0.0;
  double theta_sc = 0.0;
  double eps0 = 0.0;  // peak field 1/r0^2
  double tau = 0.0;   // Lorentzian FWHM

  static CollisionGeometry make(double E, double b, double mu);
  double angular_momentum() const;
  // Asymptotic speed of the relative coordinate.
  double speed() const;
};

// eps0 (tau/2)^2 / (t^2 + (tau/2)^2) and its time derivative.
double lorentzian_field(const CollisionGeometry& g, double t);
double lorentzian_field_rate(const CollisionGeometry& g, double t);

struct TrajectorySample {
  double t;
  double r;
  double beta;
  double eps;
};

// Instantaneous kinematic state; beta is the swept angle of the relative
// position measured from the incoming asymptote.
struct TrajectoryState {
  double r, r_dot, beta, beta_dot;
  double eps() const { return 1.0 / (r * r); }
  double eps_rate() const { return -2.0 * r_dot / (r * r * r); }
};

struct TrajectoryOptions {
  double rtol = 1e-12;
  // span ends once the field has dropped below field_ratio * eps0 ...
  double field_ratio = 1e-6;
  // ... and at least min_span_tau Lorentzian widths have elapsed.
  double min_span_tau = 8.0;
  // explicit half-span; overrides the two criteria above when > 0
  double t_max = 0.0;
  // step cap as a fraction of r / v_inf (keeps the dense interpolant accurate)
  double max_step_fraction = 0.05;
};

// Planar Coulomb trajectory integrated from closest approach (t = 0) outward;
// t < 0 follows from the time-reversal mirror. Evaluation between steps uses
// quintic Hermite interpolation in position, velocity and acceleration.
class Trajectory {
 public:
  static Trajectory integrate(double E, double b, double mu, const TrajectoryOptions& opts = {});

  const CollisionGeometry& geometry() const { return geometry_; }
  double t_max() const { return nodes_.back().t; }
  std::size_t node_count() const { return nodes_.size(); }

  // Valid for |t| <= t_max(); throws std::out_of_range otherwise.
  TrajectoryState at(double t) const;
  std::vector<TrajectorySample> sample(std::span<const double> times) const;
  // Uniform grid of `points` times over [-t_max, t_max].
  std::vector<TrajectorySample> sample_uniform(std::size_t points) const;

  // Largest relative drift of energy / angular momentum over the stored nodes.
  double energy_drift() const;
  double angular_momentum_drift() const;
  // Angle between the velocities at -t_max and +t_max.
  double deflection_angle() const;

 private:
  struct Node {
    double t;
    std::array<double, 2> p, v, a;
  };
  void eval_half(double t, std::array<double, 2>& p, std::array<double, 2>& v) const;

  CollisionGeometry geometry_;
  double half_sweep_ = 0.0;  // (pi - theta_sc) / 2
  std::vector<Node> nodes_;
};

// Convenience wrapper: integrate and sample on `times`.
std::vector<TrajectorySample> propagate_trajectory(double E, double b, double mu,
                                                   std::span<const double> times,
                                                   double tol = 1e-12);

}  // namespace rotcool
