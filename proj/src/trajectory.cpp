#include "rotcool/trajectory.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rotcool/errors.hpp"
#include "rotcool/kinematics.hpp"

namespace rotcool {

double closest_approach(double E, double b) {
  const double a = 0.5 / E;
  return a + std::sqrt(a * a + b * b);
}

double lorentzian_tau(double E, double mu) { return kLorentzWidth * std::sqrt(mu / (E * E * E)); }

CollisionGeometry CollisionGeometry::make(double E, double b, double mu) {
  if (!(E > 0.0) || b < 0.0 || !(mu > 0.0)) {
    throw ConfigError("collision geometry needs E > 0, b >= 0, mu > 0");
  }
  CollisionGeometry g;
  g.E = E;
  g.b = b;
  g.mu = mu;
  g.r0 = closest_approach(E, b);
  g.theta_sc = scattering_angle(E, b);
  g.eps0 = 1.0 / (g.r0 * g.r0);
  g.tau = lorentzian_tau(E, mu);
  return g;
}

double CollisionGeometry::angular_momentum() const { return b * std::sqrt(2.0 * mu * E); }

double CollisionGeometry::speed() const { return std::sqrt(2.0 * E / mu); }

double lorentzian_field(const CollisionGeometry& g, double t) {
  const double h = 0.5 * g.tau;
  return g.eps0 * h * h / (t * t + h * h);
}

double lorentzian_field_rate(const CollisionGeometry& g, double t) {
  const double h = 0.5 * g.tau;
  const double den = t * t + h * h;
  return -2.0 * g.eps0 * h * h * t / (den * den);
}

namespace {

using State = std::array<double, 4>;  // x, y, vx, vy

struct CoulombRhs {
  double inv_mu;
  void operator()(const State& s, State& ds, double /*t*/) const {
    const double r2 = s[0] * s[0] + s[1] * s[1];
    const double f = inv_mu / (r2 * std::sqrt(r2));
    ds[0] = s[2];
    ds[1] = s[3];
    ds[2] = f * s[0];
    ds[3] = f * s[1];
  }
};

}  // namespace

Trajectory Trajectory::integrate(double E, double b, double mu, const TrajectoryOptions& opts) {
  namespace odeint = boost::numeric::odeint;
  Trajectory traj;
  traj.geometry_ = CollisionGeometry::make(E, b, mu);
  const CollisionGeometry& g = traj.geometry_;
  traj.half_sweep_ = 0.5 * (std::numbers::pi - g.theta_sc);

  const double v_inf = g.speed();
  const double r_end = opts.t_max > 0.0 ? 0.0 : g.r0 / std::sqrt(opts.field_ratio);
  const double t_min_span = opts.t_max > 0.0 ? opts.t_max : opts.min_span_tau * g.tau;

  const CoulombRhs rhs{1.0 / mu};
  State s{g.r0, 0.0, 0.0, g.angular_momentum() / (mu * g.r0)};
  double t = 0.0;

  auto push = [&](double tt, const State& st) {
    State ds;
    rhs(st, ds, tt);
    traj.nodes_.push_back({tt, {st[0], st[1]}, {st[2], st[3]}, {ds[2], ds[3]}});
  };
  push(t, s);

  auto stepper = odeint::make_controlled<odeint::runge_kutta_fehlberg78<State>>(1e-300, opts.rtol);
  double dt = 1e-3 * g.r0 / v_inf;
  const std::size_t max_steps = 50'000'000;
  for (std::size_t step = 0;; ++step) {
    const double r = std::hypot(s[0], s[1]);
    const bool far = opts.t_max > 0.0 ? true : r >= r_end;
    if (t >= t_min_span && far) break;
    if (step > max_steps) throw NumericalError("trajectory: step limit exceeded");
    dt = std::min(dt, opts.max_step_fraction * r / v_inf);
    if (opts.t_max > 0.0) dt = std::min(dt, opts.t_max - t);
    const double t_before = t;
    if (stepper.try_step(rhs, s, t, dt) == odeint::success) {
      push(t, s);
    } else if (dt < 1e-14 * std::max(t_before, g.r0 / v_inf)) {
      std::ostringstream msg;
      msg << "trajectory: step size underflow at t=" << t << " (E=" << E << ", b=" << b << ")";
      throw NumericalError(msg.str());
    }
  }
  return traj;
}

void Trajectory::eval_half(double t, std::array<double, 2>& p, std::array<double, 2>& v) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                             [](double tt, const Node& n) { return tt < n.t; });
  if (it == nodes_.end()) {
    p = nodes_.back().p;
    v = nodes_.back().v;
    return;
  }
  if (it == nodes_.begin()) it = std::next(it);
  const Node& n1 = *it;
  const Node& n0 = *std::prev(it);
  const double h = n1.t - n0.t;
  const double s = (t - n0.t) / h;
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double H0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double H1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double H2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const double H3 = 0.5 * s3 - s4 + 0.5 * s5;
  const double H4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double H5 = 10 * s3 - 15 * s4 + 6 * s5;
  const double D0 = -30 * s2 + 60 * s3 - 30 * s4;
  const double D1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
  const double D2 = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
  const double D3 = 1.5 * s2 - 4 * s3 + 2.5 * s4;
  const double D4 = -12 * s2 + 28 * s3 - 15 * s4;
  const double D5 = 30 * s2 - 60 * s3 + 30 * s4;
  for (int k = 0; k < 2; ++k) {
    p[k] = H0 * n0.p[k] + H1 * h * n0.v[k] + H2 * h * h * n0.a[k] + H3 * h * h * n1.a[k] +
           H4 * h * n1.v[k] + H5 * n1.p[k];
    v[k] = (D0 * n0.p[k] + D1 * h * n0.v[k] + D2 * h * h * n0.a[k] + D3 * h * h * n1.a[k] +
            D4 * h * n1.v[k] + D5 * n1.p[k]) /
           h;
  }
}

TrajectoryState Trajectory::at(double t) const {
  const double tm = t_max();
  if (std::abs(t) > tm * (1.0 + 1e-12)) {
    throw std::out_of_range("trajectory evaluated outside its span");
  }
  std::array<double, 2> p, v;
  eval_half(std::abs(t), p, v);
  const double r2 = p[0] * p[0] + p[1] * p[1];
  const double r = std::sqrt(r2);
  const double r_dot = (p[0] * v[0] + p[1] * v[1]) / r;
  const double phi = std::atan2(p[1], p[0]);
  const double phi_dot = (p[0] * v[1] - p[1] * v[0]) / r2;
  if (t >= 0.0) return {r, r_dot, half_sweep_ + phi, phi_dot};
  return {r, -r_dot, half_sweep_ - phi, phi_dot};
}

std::vector<TrajectorySample> Trajectory::sample(std::span<const double> times) const {
  std::vector<TrajectorySample> out;
  out.reserve(times.size());
  for (double t : times) {
    const TrajectoryState s = at(t);
    out.push_back({t, s.r, s.beta, s.eps()});
  }
  return out;
}

std::vector<TrajectorySample> Trajectory::sample_uniform(std::size_t points) const {
  std::vector<double> times(points);
  const double tm = t_max();
  for (std::size_t i = 0; i < points; ++i) {
    times[i] = points == 1 ? 0.0 : -tm + 2.0 * tm * static_cast<double>(i) / (points - 1);
  }
  return sample(times);
}

double Trajectory::energy_drift() const {
  const double mu = geometry_.mu;
  double worst = 0.0;
  for (const Node& n : nodes_) {
    const double r = std::hypot(n.p[0], n.p[1]);
    const double e = 0.5 * mu * (n.v[0] * n.v[0] + n.v[1] * n.v[1]) + 1.0 / r;
    worst = std::max(worst, std::abs(e / geometry_.E - 1.0));
  }
  return worst;
}

double Trajectory::angular_momentum_drift() const {
  const double L0 = geometry_.angular_momentum();
  const double mu = geometry_.mu;
  double worst = 0.0;
  for (const Node& n : nodes_) {
    const double L = mu * (n.p[0] * n.v[1] - n.p[1] * n.v[0]);
    // head-on: compare against the momentum scale instead of L0 = 0
    const double scale = L0 > 0.0 ? L0 : mu * geometry_.speed() * geometry_.r0;
    worst = std::max(worst, std::abs(L - L0) / scale);
  }
  return worst;
}

double Trajectory::deflection_angle() const {
  const auto& v = nodes_.back().v;
  // incoming velocity is the mirror (-vx, vy) of the outgoing one
  const double c = (v[1] * v[1] - v[0] * v[0]) / (v[0] * v[0] + v[1] * v[1]);
  const double s = 2.0 * std::abs(v[0] * v[1]) / (v[0] * v[0] + v[1] * v[1]);
  return std::atan2(s, c);
}

std::vector<TrajectorySample> propagate_trajectory(double E, double b, double mu,
                                                   std::span<const double> times, double tol) {
  if (!(tol > 0.0)) throw ConfigError("trajectory tolerance must be positive");
  TrajectoryOptions opts;
  opts.rtol = tol;
  double need = 0.0;
  for (double t : times) need = std::max(need, std::abs(t));
  Trajectory probe = Trajectory::integrate(E, b, mu, opts);
  if (need <= probe.t_max()) return probe.sample(times);
  opts.t_max = need;
  return Trajectory::integrate(E, b, mu, opts).sample(times);
}

}  // namespace rotcool
