#include "rotcool/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "rotcool/errors.hpp"
#include "rotcool/quadrature.hpp"

namespace rotcool {

double scattering_angle(double E, double b) {
  const double x = 2.0 * E * b;
  return 2.0 * std::asin(1.0 / std::sqrt(1.0 + x * x));
}

double energy_transfer(double E_lab, double xi, double theta_sc) {
  return 2.0 * xi * (1.0 - std::cos(theta_sc)) / ((1.0 + xi) * (1.0 + xi)) * E_lab;
}

double max_energy_transfer(double E_lab, double xi) {
  return 4.0 * xi / ((1.0 + xi) * (1.0 + xi)) * E_lab;
}

double cm_to_lab(double E, const CollisionSystem& system) { return E * (1.0 + system.xi); }

double lab_to_cm(double E_lab, const CollisionSystem& system) {
  return E_lab / (1.0 + system.xi);
}

double sa_sigma(double E_lab, double mu, double omega) {
  return std::sqrt(E_lab / (mu * omega * omega));
}

double impact_pdf(const TrapScenario& scenario, const CollisionSystem& system, double E_lab,
                  double b) {
  if (b < 0.0) return 0.0;
  if (const auto* sa = std::get_if<SingleAtomTrap>(&scenario)) {
    const double s = sa_sigma(E_lab, system.mu, sa->omega);
    return b / (s * s) * std::exp(-b * b / (2.0 * s * s));
  }
  const double bm = std::get<CoulombCrystal>(scenario).b_max();
  return b <= bm ? 2.0 * b / (bm * bm) : 0.0;
}

double ImpactRule::weight_sum() const { return std::accumulate(w.begin(), w.end(), 0.0); }

namespace {

// b = a sinh(v) on [0, b_hi], pdf supplied by caller.
template <class Pdf>
void append_sinh_panel(ImpactRule& rule, double a, double b_hi, int nodes, Pdf pdf) {
  const double v_hi = std::asinh(b_hi / a);
  const GaussRule g = gauss_legendre(nodes, 0.0, v_hi);
  for (int i = 0; i < nodes; ++i) {
    const double v = g.nodes[i];
    const double b = a * std::sinh(v);
    rule.b.push_back(b);
    rule.w.push_back(g.weights[i] * a * std::cosh(v) * pdf(b));
  }
}

}  // namespace

ImpactRule impact_rule(const TrapScenario& scenario, const CollisionSystem& system,
                       double E_scatter, double E_lab, int nodes, double b_cap) {
  if (nodes < 1) throw ConfigError("impact-parameter rule needs at least one node");
  if (!(E_scatter > 0.0)) throw ConfigError("scattering energy must be positive");
  const double a = 0.5 / E_scatter;
  ImpactRule rule;
  if (const auto* cc = std::get_if<CoulombCrystal>(&scenario)) {
    const double bm = cc->b_max();
    const double hi = b_cap > 0.0 ? std::min(bm, b_cap) : bm;
    append_sinh_panel(rule, a, hi, nodes, [bm](double b) { return 2.0 * b / (bm * bm); });
    return rule;
  }
  const double s = sa_sigma(E_lab, system.mu, std::get<SingleAtomTrap>(scenario).omega);
  const double tail = s * std::sqrt(100.0);  // exp(-50) beyond
  const double hi = b_cap > 0.0 ? std::min(tail, b_cap) : tail;
  auto pdf = [s](double b) { return b / (s * s) * std::exp(-b * b / (2.0 * s * s)); };
  if (hi <= s || nodes < 2) {
    append_sinh_panel(rule, a, hi, nodes, pdf);
    return rule;
  }
  // Core panel in sinh(v); tail panel in w = exp(-b^2 / (2 sigma^2)), where f db = dw.
  const int n_core = nodes - nodes / 2;
  append_sinh_panel(rule, a, s, n_core, pdf);
  const int n_tail = nodes / 2;
  const GaussRule g = gauss_legendre(n_tail, std::exp(-hi * hi / (2.0 * s * s)), std::exp(-0.5));
  for (int i = n_tail - 1; i >= 0; --i) {
    rule.b.push_back(s * std::sqrt(-2.0 * std::log(g.nodes[i])));
    rule.w.push_back(g.weights[i]);
  }
  return rule;
}

double mean_energy_loss(const TrapScenario& scenario, const CollisionSystem& system,
                        double E_lab) {
  const double xi = system.xi;
  const double k = xi / ((1.0 + xi) * (1.0 + xi));
  if (const auto* sa = std::get_if<SingleAtomTrap>(&scenario)) {
    const double s = sa_sigma(E_lab, system.mu, sa->omega);
    const double x = 2.0 * s * E_lab;
    return k * std::log1p(x * x) / (s * s * E_lab);
  }
  const double d = std::get<CoulombCrystal>(scenario).d;
  const double x = d * E_lab;
  return 4.0 * k * std::log1p(x * x) / (d * d * E_lab);
}

double mean_energy_loss_quadrature(const TrapScenario& scenario, const CollisionSystem& system,
                                   double E_lab, int nodes) {
  const ImpactRule rule = impact_rule(scenario, system, E_lab, E_lab, nodes);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.b.size(); ++i) {
    sum += rule.w[i] * energy_transfer(E_lab, system.xi, scattering_angle(E_lab, rule.b[i]));
  }
  return sum;
}

double collision_count(const TrapScenario& scenario, const CollisionSystem& system,
                       double E_lab, double dE_lab) {
  if (!(E_lab > 0.0)) throw ConfigError("collision count needs a positive energy");
  if (dE_lab > E_lab) {
    std::ostringstream msg;
    msg << "energy step " << dE_lab << " exceeds the available energy " << E_lab;
    throw ConfigError(msg.str());
  }
  return dE_lab / mean_energy_loss(scenario, system, E_lab);
}

double time_between_collisions(const TrapScenario& scenario, const CollisionSystem& system,
                               double E_lab) {
  if (const auto* sa = std::get_if<SingleAtomTrap>(&scenario)) {
    return std::numbers::pi / sa->omega;
  }
  const double d = std::get<CoulombCrystal>(scenario).d;
  return d * std::sqrt(system.mu / (2.0 * E_lab));
}

EnergySchedule::EnergySchedule(double E_init, double E_final, double dE)
    : E_init_(E_init), E_final_(E_final), dE_(dE) {
  if (!(E_final > 0.0) || !(E_init > E_final)) {
    throw ConfigError("energy schedule needs E_init > E_final > 0");
  }
  if (!(dE > 0.0)) throw ConfigError("energy bin width must be positive");
  const double span = E_init - E_final;
  // tolerate round-off when span is a multiple of dE
  const auto n = static_cast<std::size_t>(std::ceil(span / dE - 1e-9));
  edges_.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) edges_.push_back(E_final + static_cast<double>(i) * dE);
  edges_.push_back(E_init);
}

double EnergySchedule::point(std::size_t i, BinPoint p) const {
  switch (p) {
    case BinPoint::upper: return upper(i);
    case BinPoint::lower: return lower(i);
    case BinPoint::mean: return 0.5 * (lower(i) + upper(i));
  }
  return upper(i);
}

CoolingTimeReport cooling_time(const TrapScenario& scenario, const CollisionSystem& system,
                               const EnergySchedule& schedule, BinPoint point) {
  validate(scenario);
  CoolingTimeReport report;
  report.point = point;
  auto bin_time = [&](std::size_t i, BinPoint p) {
    const double E = schedule.point(i, p);
    return schedule.width(i) / mean_energy_loss(scenario, system, E) *
           time_between_collisions(scenario, system, E);
  };
  double cum = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    CoolingBin bin;
    bin.E_lo = schedule.lower(i);
    bin.E_hi = schedule.upper(i);
    bin.E_eval = schedule.point(i, point);
    bin.n = schedule.width(i) / mean_energy_loss(scenario, system, bin.E_eval);
    bin.tau = time_between_collisions(scenario, system, bin.E_eval);
    cum += bin.n * bin.tau;
    bin.T_cum = cum;
    report.bins.push_back(bin);
    report.T_upper += bin_time(i, BinPoint::upper);
    report.T_lower += bin_time(i, BinPoint::lower);
    report.T_mean += bin_time(i, BinPoint::mean);
  }
  report.T_total = cum;
  return report;
}

}  // namespace rotcool
