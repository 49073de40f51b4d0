#include "rotcool/rotor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "rotcool/errors.hpp"
#include "rotcool/units.hpp"

namespace rotcool {

FieldModel parse_field_model(std::string_view s) {
  if (s == "exact") return FieldModel::exact;
  if (s == "lorentzian") return FieldModel::lorentzian;
  throw ConfigError("unknown field model '" + std::string(s) + "' (expected exact|lorentzian)");
}

PolarizabilityTerm parse_polarizability_term(std::string_view s) {
  if (s == "none") return PolarizabilityTerm::none;
  if (s == "anisotropic") return PolarizabilityTerm::anisotropic;
  if (s == "full") return PolarizabilityTerm::full;
  throw ConfigError("unknown polarizability term '" + std::string(s) +
                    "' (expected none|anisotropic|full)");
}

RotorState RotorState::ground(int J_max) {
  RotorState s;
  s.basis = RotorBasis(J_max);
  s.amplitudes.assign(s.basis.size(), {0.0, 0.0});
  s.amplitudes[0] = 1.0;
  return s;
}

double RotorState::norm() const {
  double sum = 0.0;
  for (const auto& c : amplitudes) sum += std::norm(c);
  return std::sqrt(sum);
}

double RotorState::population(int J, int m) const {
  return std::norm(amplitudes[basis.index(J, m)]);
}

std::vector<double> RotorState::shell_populations() const {
  std::vector<double> P(basis.J_max() + 1, 0.0);
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    P[basis.quantum_numbers(i).first] += std::norm(amplitudes[i]);
  }
  return P;
}

CollisionField CollisionField::make(double E, double b, double mu, FieldModel model,
                                    const TrajectoryOptions& opts) {
  TrajectoryOptions o = opts;
  if (model == FieldModel::lorentzian && o.t_max <= 0.0) {
    // the Lorentzian tail decays as 1/t^2 with its own width
    const double tau = lorentzian_tau(E, mu);
    const double half = 0.5 * tau;
    o.t_max = std::max(o.min_span_tau * tau, half * std::sqrt(1.0 / o.field_ratio - 1.0));
  }
  CollisionField f;
  f.model_ = model;
  f.trajectory_ = Trajectory::integrate(E, b, mu, o);
  return f;
}

CollisionField::Point CollisionField::at(double t) const {
  const double tm = t_max();
  const TrajectoryState s = trajectory_.at(std::clamp(t, -tm, tm));
  if (model_ == FieldModel::exact) return {s.eps(), s.beta, s.eps_rate(), s.beta_dot};
  const auto& g = geometry();
  return {lorentzian_field(g, t), s.beta, lorentzian_field_rate(g, t), s.beta_dot};
}

namespace {

constexpr std::size_t idx(AngularOperator op) { return static_cast<std::size_t>(op); }

double polarizability_scale(PolarizabilityTerm p) {
  return p == PolarizabilityTerm::none ? 0.0 : 1.0;
}

}  // namespace

InteractionTerms interaction_terms(const MoleculeSpec& mol, double eps, double beta,
                                   PolarizabilityTerm polarizability) {
  InteractionTerms out;
  const double c = std::cos(beta), s = std::sin(beta);
  if (mol.polarity == Polarity::polar) {
    out.op[idx(AngularOperator::cos_theta)] = -mol.D * eps * c;
    out.op[idx(AngularOperator::sin_theta_cos_phi)] = -mol.D * eps * s;
    return out;
  }
  const double alpha_perp =
      polarizability == PolarizabilityTerm::full ? mol.require_alpha_perp() : 0.0;
  const double e2 = eps * eps, e32 = eps * std::sqrt(eps);
  const double g = -0.25 * e2 * mol.delta_alpha * polarizability_scale(polarizability) +
                   0.75 * mol.Q_Z * e32;
  out.op[idx(AngularOperator::cos2_theta)] = g * c * c;
  out.op[idx(AngularOperator::cos_theta_sin_theta_cos_phi)] = 2.0 * g * c * s;
  out.op[idx(AngularOperator::sin2_theta_cos2_phi)] = g * s * s;
  out.identity = -0.25 * e2 * alpha_perp + 0.25 * mol.Q_Z * e32;
  return out;
}

InteractionTerms interaction_rates(const MoleculeSpec& mol, double eps, double beta,
                                   double eps_rate, double beta_rate,
                                   PolarizabilityTerm polarizability) {
  InteractionTerms out;
  const double c = std::cos(beta), s = std::sin(beta);
  if (mol.polarity == Polarity::polar) {
    out.op[idx(AngularOperator::cos_theta)] = -mol.D * (eps_rate * c - eps * s * beta_rate);
    out.op[idx(AngularOperator::sin_theta_cos_phi)] = -mol.D * (eps_rate * s + eps * c * beta_rate);
    return out;
  }
  const double alpha_perp =
      polarizability == PolarizabilityTerm::full ? mol.require_alpha_perp() : 0.0;
  const double pscale = polarizability_scale(polarizability);
  const double e2 = eps * eps, e32 = eps * std::sqrt(eps), e12 = std::sqrt(eps);
  const double g = -0.25 * e2 * mol.delta_alpha * pscale + 0.75 * mol.Q_Z * e32;
  const double g_rate =
      (-0.5 * eps * mol.delta_alpha * pscale + 1.125 * mol.Q_Z * e12) * eps_rate;
  const double s2 = 2.0 * s * c, c2 = c * c - s * s;
  out.op[idx(AngularOperator::cos2_theta)] = g_rate * c * c - g * s2 * beta_rate;
  out.op[idx(AngularOperator::cos_theta_sin_theta_cos_phi)] =
      g_rate * s2 + 2.0 * g * c2 * beta_rate;
  out.op[idx(AngularOperator::sin2_theta_cos2_phi)] = g_rate * s * s + g * s2 * beta_rate;
  out.identity = (-0.5 * eps * alpha_perp + 0.375 * mol.Q_Z * e12) * eps_rate;
  return out;
}

Eigen::MatrixXd build_hamiltonian(const MoleculeSpec& mol, const CouplingMatrices& cm, double eps,
                                  double beta, PolarizabilityTerm polarizability) {
  const InteractionTerms terms = interaction_terms(mol, eps, beta, polarizability);
  const std::size_t n = cm.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const int J = cm.basis().quantum_numbers(i).first;
    H(i, i) = mol.B * J * (J + 1) + terms.identity;
  }
  for (AngularOperator op : kAllAngularOperators) {
    const double f = terms.op[idx(op)];
    if (f == 0.0) continue;
    const auto& v = cm.values(op);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = cm.row_start()[i]; k < cm.row_start()[i + 1]; ++k) {
        H(i, cm.col()[k]) += f * v[k];
      }
    }
  }
  return H;
}

Eigen::MatrixXd build_hamiltonian(const CollisionSystem& system, const CouplingMatrices& cm,
                                  const CollisionField& field, double t,
                                  PolarizabilityTerm polarizability) {
  const auto p = field.at(t);
  return build_hamiltonian(system.molecule, cm, p.eps, p.beta, polarizability);
}

int default_J_max(const CollisionSystem& system) { return system.is_polar() ? 16 : 8; }

namespace {

std::shared_ptr<const CouplingMatrices> cached_couplings(int J_max) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const CouplingMatrices>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[J_max];
  if (!slot) slot = std::make_shared<const CouplingMatrices>(RotorBasis(J_max));
  return slot;
}

// Working basis for the integrator: either the full |J m> basis or the
// reflection-even combinations (|J m> + (-1)^m |J -m>)/sqrt2, m >= 0.
struct Kernel {
  std::size_t n = 0;
  int J_max = 0;
  std::vector<int> J;
  std::vector<std::size_t> row_start, col;
  std::array<std::vector<double>, 5> val;
  std::vector<std::size_t> ops;
  // kernel state i -> up to two full-basis components
  std::vector<std::array<std::pair<std::size_t, double>, 2>> expand;
  std::vector<int> expand_count;
};

std::vector<std::size_t> used_ops(const MoleculeSpec& mol) {
  if (mol.polarity == Polarity::polar) {
    return {idx(AngularOperator::cos_theta), idx(AngularOperator::sin_theta_cos_phi)};
  }
  return {idx(AngularOperator::cos2_theta), idx(AngularOperator::cos_theta_sin_theta_cos_phi),
          idx(AngularOperator::sin2_theta_cos2_phi)};
}

Kernel make_full_kernel(const CouplingMatrices& cm, const std::vector<std::size_t>& ops) {
  Kernel k;
  k.n = cm.size();
  k.J_max = cm.basis().J_max();
  k.ops = ops;
  k.row_start.assign(1, 0);
  for (std::size_t i = 0; i < k.n; ++i) {
    k.J.push_back(cm.basis().quantum_numbers(i).first);
    k.expand.push_back({std::pair{i, 1.0}, std::pair{i, 0.0}});
    k.expand_count.push_back(1);
    for (std::size_t e = cm.row_start()[i]; e < cm.row_start()[i + 1]; ++e) {
      bool any = false;
      for (std::size_t op : ops) any = any || cm.values(static_cast<AngularOperator>(op))[e] != 0.0;
      if (!any) continue;
      k.col.push_back(cm.col()[e]);
      for (std::size_t op = 0; op < 5; ++op) {
        k.val[op].push_back(cm.values(static_cast<AngularOperator>(op))[e]);
      }
    }
    k.row_start.push_back(k.col.size());
  }
  return k;
}

Kernel make_even_kernel(const CouplingMatrices& cm, const std::vector<std::size_t>& ops) {
  const RotorBasis& full = cm.basis();
  const int Jm = full.J_max();
  Kernel k;
  k.J_max = Jm;
  k.ops = ops;
  std::vector<long> reduced_of(full.size(), -1);
  std::vector<std::pair<int, int>> states;
  for (int J = 0; J <= Jm; ++J) {
    for (int m = 0; m <= J; ++m) {
      reduced_of[full.index(J, m)] = static_cast<long>(states.size());
      states.emplace_back(J, m);
    }
  }
  k.n = states.size();
  const double r2 = 1.0 / std::sqrt(2.0);
  // components of each even state in the full basis
  auto components = [&](int J, int m) {
    std::array<std::pair<std::size_t, double>, 2> c{};
    if (m == 0) {
      c[0] = {full.index(J, 0), 1.0};
      c[1] = {full.index(J, 0), 0.0};
    } else {
      c[0] = {full.index(J, m), r2};
      c[1] = {full.index(J, -m), (m % 2 == 0 ? 1.0 : -1.0) * r2};
    }
    return c;
  };
  struct Entry {
    std::size_t col;
    std::array<double, 5> v;
  };
  std::vector<std::map<std::size_t, std::array<double, 5>>> upper(k.n);
  for (std::size_t i = 0; i < k.n; ++i) {
    const auto [Jp, mp] = states[i];
    const auto ci = components(Jp, mp);
    const int ni = mp == 0 ? 1 : 2;
    for (int a = 0; a < ni; ++a) {
      const std::size_t row = ci[a].first;
      for (std::size_t e = cm.row_start()[row]; e < cm.row_start()[row + 1]; ++e) {
        const std::size_t fcol = cm.col()[e];
        const auto [J, m] = full.quantum_numbers(fcol);
        const std::size_t j = static_cast<std::size_t>(reduced_of[full.index(J, std::abs(m))]);
        if (j < i) continue;
        // coefficient of |J m> in even state j
        double cj;
        if (m == 0) cj = 1.0;
        else if (m > 0) cj = r2;
        else cj = ((-m) % 2 == 0 ? 1.0 : -1.0) * r2;
        auto& slot = upper[i][j];
        for (std::size_t op = 0; op < 5; ++op) {
          slot[op] += ci[a].second * cj * cm.values(static_cast<AngularOperator>(op))[e];
        }
      }
    }
  }
  std::vector<std::vector<Entry>> rows(k.n);
  for (std::size_t i = 0; i < k.n; ++i) {
    for (auto& [j, v] : upper[i]) {
      bool any = false;
      for (std::size_t op : ops) {
        if (std::abs(v[op]) < 1e-15) v[op] = 0.0;
        any = any || v[op] != 0.0;
      }
      if (!any) continue;
      rows[i].push_back({j, v});
      if (j != i) rows[j].push_back({i, v});
    }
  }
  k.row_start.assign(1, 0);
  for (std::size_t i = 0; i < k.n; ++i) {
    std::sort(rows[i].begin(), rows[i].end(),
              [](const Entry& a, const Entry& b) { return a.col < b.col; });
    for (const Entry& e : rows[i]) {
      k.col.push_back(e.col);
      for (std::size_t op = 0; op < 5; ++op) k.val[op].push_back(e.v[op]);
    }
    k.row_start.push_back(k.col.size());
    k.J.push_back(states[i].first);
    k.expand.push_back(components(states[i].first, states[i].second));
    k.expand_count.push_back(states[i].second == 0 ? 1 : 2);
  }
  return k;
}

std::shared_ptr<const Kernel> cached_kernel(int J_max, bool even, bool polar) {
  static std::mutex mu;
  static std::map<std::tuple<int, bool, bool>, std::shared_ptr<const Kernel>> cache;
  const auto key = std::make_tuple(J_max, even, polar);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto cm = cached_couplings(J_max);
  MoleculeSpec probe;
  probe.polarity = polar ? Polarity::polar : Polarity::apolar;
  const auto ops = used_ops(probe);
  auto k = std::make_shared<const Kernel>(even ? make_even_kernel(*cm, ops)
                                               : make_full_kernel(*cm, ops));
  std::lock_guard lock(mu);
  return cache.emplace(key, k).first->second;
}

using State = std::vector<double>;

// Interaction picture w.r.t. B J^2: i dc/dt = e^{iH0 t} V(t) e^{-iH0 t} c.
struct Rhs {
  const Kernel* k;
  const MoleculeSpec* mol;
  const CollisionField* field;
  PolarizabilityTerm pol;
  mutable std::vector<std::complex<double>> phase, u;
  mutable std::vector<double> v;

  void operator()(const State& y, State& dy, double t) const {
    const auto p = field->at(t);
    const InteractionTerms terms = interaction_terms(*mol, p.eps, p.beta, pol);
    phase.resize(k->J_max + 1);
    for (int J = 0; J <= k->J_max; ++J) phase[J] = std::polar(1.0, -mol->B * J * (J + 1) * t);
    u.resize(k->n);
    for (std::size_t l = 0; l < k->n; ++l) u[l] = phase[k->J[l]] * std::complex<double>(y[2 * l], y[2 * l + 1]);
    const std::size_t nnz = k->col.size();
    v.assign(nnz, 0.0);
    for (std::size_t op : k->ops) {
      const double f = terms.op[op];
      if (f == 0.0) continue;
      const auto& val = k->val[op];
      for (std::size_t e = 0; e < nnz; ++e) v[e] += f * val[e];
    }
    for (std::size_t r = 0; r < k->n; ++r) {
      std::complex<double> w = 0.0;
      for (std::size_t e = k->row_start[r]; e < k->row_start[r + 1]; ++e) w += v[e] * u[k->col[e]];
      const std::complex<double> c(y[2 * r], y[2 * r + 1]);
      const std::complex<double> d = std::conj(phase[k->J[r]]) * w + terms.identity * c;
      // dc = -i d
      dy[2 * r] = d.imag();
      dy[2 * r + 1] = -d.real();
    }
  }
};

}  // namespace

PropagationResult propagate(const CollisionSystem& system, const CollisionField& field,
                            const RotorState& initial, double t0, double t1,
                            const PropagationOptions& opts) {
  namespace odeint = boost::numeric::odeint;
  const int J_max = initial.basis.J_max();
  const bool polar = system.is_polar();
  if (!polar && opts.polarizability == PolarizabilityTerm::full) system.molecule.require_alpha_perp();
  const auto kernel = cached_kernel(J_max, opts.reflection_symmetry, polar);
  const Kernel& k = *kernel;

  // project the start state onto the working basis
  State y(2 * k.n, 0.0);
  double captured = 0.0;
  for (std::size_t i = 0; i < k.n; ++i) {
    std::complex<double> c = 0.0;
    for (int a = 0; a < k.expand_count[i]; ++a) {
      c += k.expand[i][a].second * initial.amplitudes[k.expand[i][a].first];
    }
    // interaction picture at t0
    c *= std::polar(1.0, system.molecule.B * k.J[i] * (k.J[i] + 1) * t0);
    y[2 * i] = c.real();
    y[2 * i + 1] = c.imag();
    captured += std::norm(c);
  }
  if (std::abs(captured - initial.norm() * initial.norm()) > 1e-12) {
    throw ConfigError("initial state is not reflection-even; disable reflection_symmetry");
  }

  Rhs rhs{&k, &system.molecule, &field, opts.polarizability, {}, {}, {}};
  odeint::bulirsch_stoer<State> stepper(opts.atol, opts.rtol);

  PropagationResult res;
  res.J_max = J_max;
  auto shell_pops = [&](const State& s) {
    std::vector<double> P(J_max + 1, 0.0);
    for (std::size_t i = 0; i < k.n; ++i) P[k.J[i]] += s[2 * i] * s[2 * i] + s[2 * i + 1] * s[2 * i + 1];
    return P;
  };
  auto top_shells = [&](const State& s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k.n; ++i) {
      if (k.J[i] >= J_max - 1 && J_max >= 1) sum += s[2 * i] * s[2 * i] + s[2 * i + 1] * s[2 * i + 1];
    }
    return sum;
  };
  auto observer = [&](const State& s, double) { res.top_shell_peak = std::max(res.top_shell_peak, top_shells(s)); };

  // (time, record P_J there)
  std::vector<std::pair<double, bool>> stops;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  for (double t : opts.trace_times) {
    if ((t - t0) * dir >= 0.0 && (t1 - t) * dir >= 0.0) stops.emplace_back(t, true);
  }
  if (dir < 0) std::reverse(stops.begin(), stops.end());
  if (stops.empty() || stops.back().first != t1) stops.emplace_back(t1, false);

  const double tau = field.geometry().tau;
  // local time scale: the pulse near t = 0, |t| in the power-law tails
  auto step_cap = [&](double tt) { return opts.max_step_fraction * std::max(0.5 * tau, std::abs(tt)); };
  double dt = dir * std::min(0.01 * tau, std::abs(t1 - t0));
  double t = t0;
  observer(y, t);
  for (const auto& [stop, record] : stops) {
    int failures = 0;
    while ((stop - t) * dir > 0.0) {
      const double cap = step_cap(t);
      if (std::abs(dt) > cap) dt = dir * cap;
      const bool last = (t + dt - stop) * dir >= 0.0;
      if (last) dt = stop - t;
      const double t_before = t;
      const auto r = stepper.try_step(rhs, y, t, dt);
      if (r == odeint::success) {
        if (last) t = stop;
        ++res.steps;
        failures = 0;
        observer(y, t);
      } else if (++failures > 500 || std::abs(dt) < 1e-14 * std::max(1.0, std::abs(t_before))) {
        std::ostringstream msg;
        msg << "rotor propagation step size underflow at t=" << t_before;
        throw NumericalError(msg.str());
      }
    }
    if (record) {
      res.trace_t.push_back(stop);
      res.trace_PJ.push_back(shell_pops(y));
    }
  }

  // back to the Schroedinger picture, full basis
  res.final_state = RotorState::ground(J_max);
  std::fill(res.final_state.amplitudes.begin(), res.final_state.amplitudes.end(), 0.0);
  double norm2 = 0.0, excited = 0.0;
  for (std::size_t i = 0; i < k.n; ++i) {
    std::complex<double> c(y[2 * i], y[2 * i + 1]);
    const double p = std::norm(c);
    norm2 += p;
    if (k.J[i] > 0) excited += p;
    c *= std::polar(1.0, -system.molecule.B * k.J[i] * (k.J[i] + 1) * t1);
    for (int a = 0; a < k.expand_count[i]; ++a) {
      res.final_state.amplitudes[k.expand[i][a].first] += k.expand[i][a].second * c;
    }
  }
  res.ground_population = std::norm(res.final_state.amplitudes[0]);
  res.excitation = excited;
  res.norm_drift = std::abs(std::sqrt(norm2) - 1.0);
  for (double x : y) {
    if (!std::isfinite(x)) throw NumericalError("rotor propagation produced non-finite amplitudes");
  }
  return res;
}

PropagationResult propagate_collision(const CollisionSystem& system, double E, double b,
                                      const PropagationOptions& opts) {
  const CollisionField field = CollisionField::make(E, b, system.mu, opts.field_model, opts.trajectory);
  int J_max = opts.J_max > 0 ? opts.J_max : default_J_max(system);
  while (true) {
    PropagationResult res;
    try {
      res = propagate(system, field, RotorState::ground(J_max), -field.t_max(), field.t_max(), opts);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " [" << system.name() << ", E=" << units::hartree_to_eV(E)
          << " eV, b=" << b << " Bohr]";
      throw NumericalError(msg.str());
    }
    if (!opts.escalate || res.top_shell_peak <= opts.shell_threshold) return res;
    if (J_max + 4 > opts.J_max_cap) {
      std::ostringstream msg;
      msg << "rotor basis not converged at J_max=" << J_max << " (top shells hold "
          << res.top_shell_peak << ") [" << system.name() << ", E=" << units::hartree_to_eV(E)
          << " eV, b=" << b << " Bohr]";
      throw NumericalError(msg.str());
    }
    J_max += 4;
  }
}

}  // namespace rotcool
