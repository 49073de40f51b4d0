#include "rotcool/cycle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include "rotcool/errors.hpp"
#include "rotcool/units.hpp"

namespace rotcool {

Engine parse_engine(std::string_view s) {
  if (s == "full") return Engine::full;
  if (s == "pt") return Engine::pt;
  if (s == "eta2l") return Engine::eta2l;
  throw ConfigError("unknown engine '" + std::string(s) + "' (expected full|pt|eta2l)");
}

std::string_view engine_name(Engine e) {
  switch (e) {
    case Engine::full: return "full";
    case Engine::pt: return "pt";
    case Engine::eta2l: return "eta2l";
  }
  return "?";
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(jobs > 0 ? jobs : 1, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int cycle_start_J(const CollisionSystem& system) { return system.is_polar() ? 6 : 8; }

double collision_excitation(const CollisionSystem& system, double E, double b,
                            const CycleOptions& opts) {
  switch (opts.engine) {
    case Engine::full: {
      PropagationOptions prop = opts.propagation;
      if (prop.J_max == 0) prop.J_max = cycle_start_J(system);
      return propagate_collision(system, E, b, prop).excitation;
    }
    case Engine::pt: {
      if (system.is_polar()) throw ConfigError("pt engine applies to apolar molecules only");
      if (!opts.fit) return pt_amplitude(system, E, b).probability();
      const ChiParameters chi = chi_parameters(system, E, b);
      return chi.chi_Q * chi.chi_Q * chi.kappa * chi.kappa * opts.fit->squared(chi.kappa) / 45.0;
    }
    case Engine::eta2l:
      return 2.0 * nonadiabaticity_2level(system, E, b);
  }
  throw ConfigError("unknown engine");
}

double coupling_cutoff(const CollisionSystem& system, double E, double ratio) {
  auto strength = [&](double b) {
    const ChiParameters c = chi_parameters(system, E, b);
    return system.is_polar() ? c.chi_D : std::max(c.chi_Q, c.chi_alpha);
  };
  const double target = ratio * strength(0.0);
  double lo = 0.0, hi = 1.0 / E;
  while (strength(hi) > target) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (strength(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

namespace {

double peak_strength(const CollisionSystem& system, double E) {
  const ChiParameters c = chi_parameters(system, E, 0.0);
  return system.is_polar() ? c.chi_D : std::max(c.chi_Q, c.chi_alpha);
}

ImpactRule rule_for(const CollisionSystem& system, const TrapScenario& scenario, double E,
                    const CycleOptions& opts, double& b_cap) {
  b_cap = 0.0;
  if (opts.engine == Engine::full && opts.rule.chi_cut > 0.0) {
    const double chi0 = peak_strength(system, E);
    if (chi0 > 0.0) b_cap = coupling_cutoff(system, E, opts.rule.chi_cut * std::min(1.0, chi0) / chi0);
  }
  return impact_rule(scenario, system, E, cm_to_lab(E, system), opts.rule.nodes, b_cap);
}

double node_excitation(const CollisionSystem& system, double E, double b, const CycleOptions& opts) {
  // full propagation already names E and b
  if (opts.engine == Engine::full) return collision_excitation(system, E, b, opts);
  try {
    return collision_excitation(system, E, b, opts);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << e.what() << " [E=" << units::hartree_to_eV(E) << " eV, b=" << b << " Bohr]";
    throw NumericalError(msg.str());
  }
}

}  // namespace

AveragedExcitation average_excitation(const CollisionSystem& system, const TrapScenario& scenario,
                                      double E, const CycleOptions& opts) {
  validate(scenario);
  AveragedExcitation out;
  const ImpactRule rule = rule_for(system, scenario, E, opts, out.b_cap);
  out.b = rule.b;
  out.w = rule.w;
  out.eps.resize(rule.b.size());
  parallel_for(rule.b.size(), opts.jobs,
               [&](std::size_t i) { out.eps[i] = node_excitation(system, E, rule.b[i], opts); });
  for (std::size_t i = 0; i < rule.b.size(); ++i) out.value += rule.w[i] * out.eps[i];
  return out;
}

CycleResult accumulate(const CollisionSystem& system, const TrapScenario& scenario,
                       const EnergySchedule& schedule, const CycleOptions& opts) {
  validate(scenario);
  const auto& edges = schedule.edges();
  std::vector<ImpactRule> rules(edges.size());
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    double cap = 0.0;
    rules[e] = rule_for(system, scenario, edges[e], opts, cap);
    for (std::size_t i = 0; i < rules[e].b.size(); ++i) tasks.emplace_back(e, i);
  }
  std::vector<double> eps(tasks.size());
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t k) {
    const auto [e, i] = tasks[k];
    try {
      eps[k] = node_excitation(system, edges[e], rules[e].b[i], opts);
    } catch (const NumericalError& err) {
      throw NumericalError(std::string(err.what()) + " [schedule edge " + std::to_string(e) + "]");
    }
  });
  std::vector<double> edge_eps(edges.size(), 0.0);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto [e, i] = tasks[k];
    edge_eps[e] += rules[e].w[i] * eps[k];
  }
  return accumulate_from_edges(system, scenario, schedule, edge_eps, opts.engine);
}

CycleResult accumulate_from_edges(const CollisionSystem& system, const TrapScenario& scenario,
                                  const EnergySchedule& schedule,
                                  const std::vector<double>& edge_eps, Engine engine) {
  if (edge_eps.size() != schedule.size() + 1) {
    throw std::invalid_argument("one averaged excitation per schedule edge expected");
  }
  CycleResult res;
  res.engine = engine;
  double su = 0.0, sl = 0.0, sm = 0.0, log_keep = 0.0, T = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    CycleBin bin;
    bin.E_lo = schedule.lower(i);
    bin.E_hi = schedule.upper(i);
    bin.E_lab_hi = cm_to_lab(bin.E_hi, system);
    const double E_mid = schedule.point(i, BinPoint::mean);
    const double w = schedule.width(i);
    bin.n_upper = w / mean_energy_loss(scenario, system, bin.E_hi);
    bin.n_lower = w / mean_energy_loss(scenario, system, bin.E_lo);
    bin.n_mean = w / mean_energy_loss(scenario, system, E_mid);
    bin.eps_upper = edge_eps[i + 1];
    bin.eps_lower = edge_eps[i];
    bin.eps_mean = 0.5 * (bin.eps_upper + bin.eps_lower);
    su += bin.n_upper * bin.eps_upper;
    sl += bin.n_lower * bin.eps_lower;
    sm += bin.n_mean * bin.eps_mean;
    log_keep += bin.n_mean * std::log1p(-std::min(bin.eps_mean, 1.0));
    T += bin.n_mean * time_between_collisions(scenario, system, E_mid);
    bin.sigma_cum_upper = su;
    bin.sigma_cum_lower = sl;
    bin.sigma_cum_mean = sm;
    bin.product_cum = -std::expm1(log_keep);
    bin.T_cum = T;
    res.bins.push_back(bin);
  }
  res.sigma_upper = su;
  res.sigma_lower = sl;
  res.sigma_mean = sm;
  res.product = -std::expm1(log_keep);
  res.T_total = T;
  if (sm > 0.5) warn("accumulated excitation above 0.5; the first-order sum is no longer meaningful");
  return res;
}

double crossing_energy(const CycleResult& result, double level, BinPoint point) {
  double prev_E = result.bins.empty() ? 0.0 : result.bins.front().E_lo, prev_S = 0.0;
  for (const CycleBin& bin : result.bins) {
    const double S = point == BinPoint::upper   ? bin.sigma_cum_upper
                     : point == BinPoint::lower ? bin.sigma_cum_lower
                                                : bin.sigma_cum_mean;
    if (S >= level) {
      const double f = (level - prev_S) / (S - prev_S);
      return prev_E + f * (bin.E_hi - prev_E);
    }
    prev_E = bin.E_hi;
    prev_S = S;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace rotcool
