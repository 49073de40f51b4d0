#include "rotcool/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rotcool/csv.hpp"
#include "rotcool/cycle.hpp"
#include "rotcool/errors.hpp"
#include "rotcool/estimators.hpp"
#include "rotcool/kinematics.hpp"
#include "rotcool/rotor.hpp"
#include "rotcool/trajectory.hpp"
#include "rotcool/units.hpp"

#ifndef ROTCOOL_DEFAULTS_PATH
#define ROTCOOL_DEFAULTS_PATH "share/rotcool/reproduce_defaults.json"
#endif

namespace rotcool::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_set(double v) { return !std::isnan(v); }

ConfigError flag_error(std::string_view flag, std::string_view what) {
  return ConfigError(std::string(flag) + ": " + std::string(what));
}

double positive(double v, std::string_view flag) {
  if (!is_set(v)) throw flag_error(flag, "is required");
  if (!(v > 0.0) || !std::isfinite(v)) throw flag_error(flag, "must be a positive number");
  return v;
}

std::string file_tag(std::string name) {
  std::replace(name.begin(), name.end(), '+', 'p');
  return name;
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream s;
  s << std::setprecision(digits) << x;
  return s.str();
}

// Key/value lines for --dry-run.
void kv(std::ostream& out, std::string_view key, double value) {
  out << key << " = " << format_double(value) << '\n';
}
void kv(std::ostream& out, std::string_view key, std::string_view value) {
  out << key << " = " << value << '\n';
}

void describe(std::ostream& out, const CollisionSystem& s) {
  kv(out, "system", s.name());
  kv(out, "coolant", s.coolant);
  kv(out, "B_hartree", s.molecule.B);
  kv(out, "D_au", s.molecule.D);
  kv(out, "mu_me", s.mu);
  kv(out, "xi", s.xi);
}

void describe(std::ostream& out, const TrapScenario& sc) {
  if (const auto* cc = std::get_if<CoulombCrystal>(&sc)) {
    kv(out, "scenario", "crystal");
    kv(out, "d_bohr", cc->d);
  } else {
    kv(out, "scenario", "single-atom");
    kv(out, "omega_au", std::get<SingleAtomTrap>(sc).omega);
  }
}

struct ScheduleEv {
  double init, final, de;
};

EnergySchedule resolve_schedule(const RunConfig& cfg, ScheduleEv fallback) {
  const double init = positive(is_set(cfg.E_init_eV) ? cfg.E_init_eV : fallback.init, "--einit-ev");
  const double fin = positive(is_set(cfg.E_final_eV) ? cfg.E_final_eV : fallback.final, "--efinal-ev");
  const double de = positive(is_set(cfg.dE_eV) ? cfg.dE_eV : fallback.de, "--de-ev");
  if (!(init > fin)) throw flag_error("--einit-ev", "must exceed --efinal-ev");
  return EnergySchedule(units::eV_to_hartree(init), units::eV_to_hartree(fin),
                        units::eV_to_hartree(de));
}

void describe(std::ostream& out, const EnergySchedule& s) {
  kv(out, "E_init_hartree", s.E_init());
  kv(out, "E_final_hartree", s.E_final());
  kv(out, "dE_hartree", s.dE());
  kv(out, "bins", static_cast<double>(s.size()));
}

BinPoint resolve_point(std::string_view p) {
  if (p == "upper") return BinPoint::upper;
  if (p == "lower") return BinPoint::lower;
  if (p == "mean") return BinPoint::mean;
  throw flag_error("--point", "expected upper|lower|mean");
}

PropagationOptions propagation_options(const RunConfig& cfg) {
  PropagationOptions p;
  try {
    p.field_model = parse_field_model(cfg.field_model);
  } catch (const std::exception& e) {
    throw flag_error("--field-model", e.what());
  }
  try {
    p.polarizability = parse_polarizability_term(cfg.polarizability);
  } catch (const std::exception& e) {
    throw flag_error("--polarizability", e.what());
  }
  p.J_max = cfg.J_max;
  p.rtol = positive(cfg.rtol, "--rtol");
  p.atol = positive(cfg.atol, "--atol");
  return p;
}

void check_propagation(const CollisionSystem& s, const PropagationOptions& p) {
  if (!s.is_polar() && p.polarizability == PolarizabilityTerm::full &&
      !s.molecule.alpha_perp) {
    throw flag_error("--polarizability", "'" + s.name() +
                                             "' has no perpendicular polarizability; use "
                                             "anisotropic or none");
  }
}

Engine resolve_engine(const RunConfig& cfg, const CollisionSystem& s) {
  Engine e;
  try {
    e = parse_engine(cfg.engine);
  } catch (const std::exception& ex) {
    throw flag_error("--engine", ex.what());
  }
  if (e == Engine::pt && s.is_polar()) throw flag_error("--engine", "pt needs an apolar molecule");
  if (e == Engine::eta2l && !s.is_polar()) {
    throw flag_error("--engine", "eta2l needs a polar molecule");
  }
  return e;
}

std::optional<KappaFit> resolve_fit(std::string_view f) {
  if (f == "none") return std::nullopt;
  if (f == "tabulated") return KappaFit::tabulated();
  if (f == "refit") return fit_kappa(default_kappa_grid());
  throw flag_error("--fit", "expected none|tabulated|refit");
}

void deliver(const CsvTable& table, const RunConfig& cfg, std::ostream& out) {
  if (cfg.output.empty()) {
    write_csv(out, table);
  } else {
    emit_csv(table, cfg.output);
  }
}

void write_summary(const json& j, const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw flag_error("--summary", "cannot write '" + path + "'");
  f << j.dump(2) << '\n';
  if (!f) throw flag_error("--summary", "cannot write '" + path + "'");
}

// ---------------------------------------------------------------------------
// shared pipelines

CsvTable cooling_table(const CoolingTimeReport& r) {
  CsvTable t;
  t.header = {"E_lab_eV", "n", "tau_s", "cumulative_T_s"};
  for (const auto& b : r.bins) {
    t.add_row({units::hartree_to_eV(b.E_hi), b.n, units::au_time_to_s(b.tau),
               units::au_time_to_s(b.T_cum)});
  }
  return t;
}

CsvTable cycle_table(const CycleResult& r) {
  CsvTable t;
  t.header = {"E_eV",           "E_lab_eV",       "n",
              "eps_upper",      "eps_lower",      "eps_mean",
              "Sigma_cum_upper", "Sigma_cum_lower", "Sigma_cum_mean",
              "T_cum_s"};
  for (const auto& b : r.bins) {
    t.add_row({units::hartree_to_eV(b.E_hi), units::hartree_to_eV(b.E_lab_hi), b.n_mean,
               b.eps_upper, b.eps_lower, b.eps_mean, b.sigma_cum_upper, b.sigma_cum_lower,
               b.sigma_cum_mean, units::au_time_to_s(b.T_cum)});
  }
  return t;
}

json cycle_json(const CollisionSystem& s, const CycleResult& r) {
  const double cross = crossing_energy(r, 0.05);
  return {{"system", s.name()},
          {"engine", std::string(engine_name(r.engine))},
          {"sigma_upper", r.sigma_upper},
          {"sigma_lower", r.sigma_lower},
          {"sigma_mean", r.sigma_mean},
          {"product", r.product},
          {"T_total_s", units::au_time_to_s(r.T_total)},
          {"crossing_5pct_eV", std::isnan(cross) ? kNaN : units::hartree_to_eV(cross)}};
}

std::string crossing_text(const CycleResult& r) {
  const double c = crossing_energy(r, 0.05);
  return std::isnan(c) ? std::string("not reached") : fmt(units::hartree_to_eV(c), 4) + " eV";
}

struct Trace {
  PropagationResult result;
  CsvTable table;
};

Trace collision_trace(const CollisionSystem& s, double E, double b, int samples,
                      const PropagationOptions& base) {
  PropagationOptions p = base;
  const double t_max =
      CollisionField::make(E, b, s.mu, p.field_model, p.trajectory).t_max();
  p.trace_times.resize(samples);
  for (int i = 0; i < samples; ++i) {
    p.trace_times[i] = -t_max + 2.0 * t_max * i / (samples - 1);
  }
  Trace tr{propagate_collision(s, E, b, p), {}};
  const std::size_t shells = tr.result.trace_PJ.empty() ? 0 : tr.result.trace_PJ.front().size();
  tr.table.header.push_back("t_au");
  for (std::size_t J = 0; J < shells; ++J) tr.table.header.push_back("P_J" + std::to_string(J));
  for (std::size_t k = 0; k < tr.result.trace_t.size(); ++k) {
    std::vector<double> row{tr.result.trace_t[k]};
    row.insert(row.end(), tr.result.trace_PJ[k].begin(), tr.result.trace_PJ[k].end());
    tr.table.add_row(std::move(row));
  }
  return tr;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) {
    g[i] = points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  }
  return g;
}

double full_excitation(const CollisionSystem& s, double E, double b, PropagationOptions p) {
  if (p.J_max == 0) p.J_max = cycle_start_J(s);
  return propagate_collision(s, E, b, p).excitation;
}

// Per-b comparison of single-collision measures at fixed E.
CsvTable b_scan_table(const CollisionSystem& s, double E, const std::vector<double>& bs,
                      bool with_full, const PropagationOptions& prop, int jobs) {
  const std::size_t n = bs.size();
  std::vector<ChiParameters> chi(n);
  std::vector<double> eta2l(n, kNaN), eta(n, kNaN), pt(n, kNaN), full(n, kNaN);
  parallel_for(n, jobs, [&](std::size_t i) {
    chi[i] = chi_parameters(s, E, bs[i]);
    if (s.is_polar()) {
      eta2l[i] = nonadiabaticity_2level(s, E, bs[i]);
      eta[i] = peak_nonadiabaticity(s, E, bs[i]);
    } else {
      pt[i] = pt_amplitude(s, E, bs[i]).probability();
    }
    if (with_full) full[i] = full_excitation(s, E, bs[i], prop);
  });
  CsvTable t;
  t.header = {"b_bohr", "chi_D", "chi_alpha", "chi_Q", "kappa", "eta2l", "eta_exact", "pt"};
  if (with_full) t.header.push_back("eps_full");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{bs[i],      chi[i].chi_D, chi[i].chi_alpha, chi[i].chi_Q,
                            chi[i].kappa, eta2l[i],   eta[i],           pt[i]};
    if (with_full) row.push_back(full[i]);
    t.add_row(std::move(row));
  }
  return t;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_cooling_time(const RunConfig& cfg, std::ostream& out) {
  const CollisionSystem s = resolve_system(cfg);
  const TrapScenario sc = resolve_scenario(cfg, units::um_to_bohr(5.29));
  const EnergySchedule sched = resolve_schedule(cfg, {2.0, 0.01, 0.001});
  const BinPoint point = resolve_point(cfg.point);
  if (cfg.dry_run) {
    describe(out, s);
    describe(out, sc);
    describe(out, sched);
    kv(out, "energy_frame", "lab");
    return kOk;
  }
  const CoolingTimeReport r = cooling_time(sc, s, sched, point);
  deliver(cooling_table(r), cfg, out);
  if (!cfg.output.empty()) {
    out << "T_total = " << fmt(units::au_time_to_s(r.T_total)) << " s (" << cfg.point
        << " point; upper " << fmt(units::au_time_to_s(r.T_upper)) << " s, lower "
        << fmt(units::au_time_to_s(r.T_lower)) << " s)\n";
  }
  write_summary({{"system", s.name()},
                 {"T_total_s", units::au_time_to_s(r.T_total)},
                 {"T_upper_s", units::au_time_to_s(r.T_upper)},
                 {"T_lower_s", units::au_time_to_s(r.T_lower)},
                 {"T_mean_s", units::au_time_to_s(r.T_mean)},
                 {"bins", r.bins.size()}},
                cfg.summary);
  return kOk;
}

int cmd_trajectory(const RunConfig& cfg, std::ostream& out) {
  const CollisionSystem s = resolve_system(cfg);
  const double E = units::eV_to_hartree(positive(cfg.E_eV, "--e-ev"));
  const double b = is_set(cfg.b_bohr) ? cfg.b_bohr : 0.0;
  if (!(b >= 0.0)) throw flag_error("--b-bohr", "must be non-negative");
  if (cfg.samples < 2) throw flag_error("--samples", "needs at least 2 points");
  if (cfg.dry_run) {
    describe(out, s);
    kv(out, "E_hartree", E);
    kv(out, "b_bohr", b);
    kv(out, "r0_bohr", closest_approach(E, b));
    kv(out, "tau_au", lorentzian_tau(E, s.mu));
    return kOk;
  }
  const Trajectory tr = Trajectory::integrate(E, b, s.mu);
  CsvTable t;
  t.header = {"t_au", "r_bohr", "beta_rad", "eps_au"};
  for (const auto& p : tr.sample_uniform(static_cast<std::size_t>(cfg.samples))) {
    t.add_row({p.t, p.r, p.beta, p.eps});
  }
  deliver(t, cfg, out);
  const auto& g = tr.geometry();
  if (!cfg.output.empty()) {
    out << "theta_sc = " << fmt(g.theta_sc) << " rad, deflection = " << fmt(tr.deflection_angle())
        << " rad, r0 = " << fmt(g.r0) << " Bohr, tau = " << fmt(g.tau) << " au\n";
  }
  write_summary({{"system", s.name()},
                 {"theta_sc_rad", g.theta_sc},
                 {"deflection_rad", tr.deflection_angle()},
                 {"r0_bohr", g.r0},
                 {"tau_au", g.tau},
                 {"t_max_au", tr.t_max()}},
                cfg.summary);
  return kOk;
}

int cmd_collide(const RunConfig& cfg, std::ostream& out) {
  const CollisionSystem s = resolve_system(cfg);
  const double E = units::eV_to_hartree(positive(cfg.E_eV, "--e-ev"));
  const double b = is_set(cfg.b_bohr) ? cfg.b_bohr : 0.0;
  if (!(b >= 0.0)) throw flag_error("--b-bohr", "must be non-negative");
  if (cfg.samples < 2) throw flag_error("--samples", "needs at least 2 points");
  const PropagationOptions p = propagation_options(cfg);
  check_propagation(s, p);
  if (cfg.dry_run) {
    describe(out, s);
    kv(out, "E_hartree", E);
    kv(out, "b_bohr", b);
    kv(out, "J_max", p.J_max > 0 ? p.J_max : default_J_max(s));
    kv(out, "rtol", p.rtol);
    kv(out, "atol", p.atol);
    kv(out, "field_model", cfg.field_model);
    kv(out, "polarizability", cfg.polarizability);
    return kOk;
  }
  const Trace tr = collision_trace(s, E, b, cfg.samples, p);
  deliver(tr.table, cfg, out);
  const auto& r = tr.result;
  if (!cfg.output.empty()) {
    out << "excitation = " << fmt(r.excitation, 8) << ", norm drift = " << fmt(r.norm_drift, 3)
        << ", J_max = " << r.J_max << ", steps = " << r.steps << '\n';
  }
  write_summary({{"system", s.name()},
                 {"E_eV", cfg.E_eV},
                 {"b_bohr", b},
                 {"excitation", r.excitation},
                 {"ground_population", r.ground_population},
                 {"norm_drift", r.norm_drift},
                 {"J_max", r.J_max}},
                cfg.summary);
  return kOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const CollisionSystem s = resolve_system(cfg);
  if (cfg.points < 1) throw flag_error("--points", "must be at least 1");
  if (cfg.scan == "b") {
    const double E = units::eV_to_hartree(positive(cfg.E_eV, "--e-ev"));
    const double lo = positive(cfg.b_min_bohr, "--b-min-bohr");
    const double hi = positive(cfg.b_max_bohr, "--b-max-bohr");
    if (!(hi > lo)) throw flag_error("--b-max-bohr", "must exceed --b-min-bohr");
    const PropagationOptions p = propagation_options(cfg);
    if (cfg.with_full) check_propagation(s, p);
    if (cfg.dry_run) {
      describe(out, s);
      kv(out, "scan", "b");
      kv(out, "E_hartree", E);
      kv(out, "b_min_bohr", lo);
      kv(out, "b_max_bohr", hi);
      return kOk;
    }
    std::vector<double> bs{0.0};
    for (double b : log_grid(lo, hi, cfg.points)) bs.push_back(b);
    const CsvTable t = b_scan_table(s, E, bs, cfg.with_full, p, cfg.jobs);
    deliver(t, cfg, out);
    write_summary({{"system", s.name()}, {"E_eV", cfg.E_eV}, {"rows", t.rows.size()}},
                  cfg.summary);
    return kOk;
  }
  if (cfg.scan != "energy") throw flag_error("--scan", "expected b|energy");
  const double lo = positive(cfg.E_min_eV, "--emin-ev");
  const double hi = positive(cfg.E_max_eV, "--emax-ev");
  if (!(hi >= lo)) throw flag_error("--emax-ev", "must not be below --emin-ev");
  const TrapScenario sc = resolve_scenario(cfg, 1e5);
  if (cfg.dry_run) {
    describe(out, s);
    describe(out, sc);
    kv(out, "scan", "energy");
    kv(out, "E_min_hartree", units::eV_to_hartree(lo));
    kv(out, "E_max_hartree", units::eV_to_hartree(hi));
    return kOk;
  }
  CycleOptions opts;
  opts.engine = s.is_polar() ? Engine::eta2l : Engine::pt;
  opts.rule.nodes = cfg.nodes;
  opts.jobs = cfg.jobs;
  const auto* cc = std::get_if<CoulombCrystal>(&sc);
  CsvTable t;
  t.header = {"E_eV", "E_lab_eV", "kappa", "eps_avg", "chiQ2_avg"};
  for (int i = 0; i < cfg.points; ++i) {
    const double E_eV = cfg.points == 1 ? lo : lo + (hi - lo) * i / (cfg.points - 1);
    const double E = units::eV_to_hartree(E_eV);
    const double avg = average_excitation(s, sc, E, opts).value;
    const double chiQ2 = (!s.is_polar() && cc) ? averaged_chiQ2(s, E, cc->d).closed_form : kNaN;
    t.add_row({E_eV, units::hartree_to_eV(cm_to_lab(E, s)), kappa(s.molecule, s.mu, E), avg,
               chiQ2});
  }
  deliver(t, cfg, out);
  write_summary({{"system", s.name()},
                 {"engine", std::string(engine_name(opts.engine))},
                 {"rows", t.rows.size()}},
                cfg.summary);
  return kOk;
}

int cmd_fit_kappa(const RunConfig& cfg, std::ostream& out) {
  if (cfg.kappa_points < 4) throw flag_error("--points", "needs at least 4 grid points");
  const double cutoff = positive(cfg.kappa_cutoff, "--cutoff");
  if (cfg.dry_run) {
    kv(out, "points", static_cast<double>(cfg.kappa_points));
    kv(out, "cutoff", cutoff);
    return kOk;
  }
  const std::vector<double> grid = default_kappa_grid(cfg.kappa_points, cutoff);
  const KappaFit fit = fit_kappa(grid);
  CsvTable t;
  t.header = {"kappa", "I", "fit", "residual"};
  for (double k : grid) {
    const double I = kappa_integral(k).value.real();
    t.add_row({k, I, fit(k), I - fit(k)});
  }
  deliver(t, cfg, out);
  if (!cfg.output.empty()) {
    out << "a1 = " << fmt(fit.a1) << ", a2 = " << fmt(fit.a2) << ", a3 = " << fmt(fit.a3)
        << ", rms residual = " << fmt(fit.rms_residual, 3) << '\n';
  }
  write_summary({{"a1", fit.a1},
                 {"a2", fit.a2},
                 {"a3", fit.a3},
                 {"rms_residual", fit.rms_residual},
                 {"kappa_min", grid.front()},
                 {"kappa_max", grid.back()},
                 {"points", grid.size()}},
                cfg.summary);
  return kOk;
}

int cmd_cycle(const RunConfig& cfg, std::ostream& out) {
  const CollisionSystem s = resolve_system(cfg);
  const TrapScenario sc = resolve_scenario(cfg, 1e5);
  CycleOptions opts;
  opts.engine = resolve_engine(cfg, s);
  const double de = opts.engine == Engine::full ? 0.1 : 0.05;
  const EnergySchedule sched = resolve_schedule(cfg, {kNaN, 0.1, de});
  if (cfg.nodes < 1) throw flag_error("--nodes", "must be at least 1");
  opts.rule.nodes = cfg.nodes;
  opts.rule.chi_cut = cfg.chi_cut;
  opts.propagation = propagation_options(cfg);
  if (opts.engine == Engine::full) check_propagation(s, opts.propagation);
  opts.jobs = cfg.jobs;
  if (cfg.dry_run) {
    describe(out, s);
    describe(out, sc);
    describe(out, sched);
    kv(out, "energy_frame", "cm");
    kv(out, "engine", engine_name(opts.engine));
    kv(out, "nodes", static_cast<double>(cfg.nodes));
    kv(out, "rtol", opts.propagation.rtol);
    kv(out, "atol", opts.propagation.atol);
    return kOk;
  }
  if (opts.engine == Engine::pt) opts.fit = resolve_fit(cfg.fit);
  const CycleResult r = accumulate(s, sc, sched, opts);
  deliver(cycle_table(r), cfg, out);
  if (!cfg.output.empty()) {
    out << s.name() << ' ' << engine_name(r.engine) << ": Sigma = " << fmt(r.sigma_mean)
        << " (upper " << fmt(r.sigma_upper) << ", lower " << fmt(r.sigma_lower)
        << "), 5% crossing " << crossing_text(r) << '\n';
  }
  write_summary(cycle_json(s, r), cfg.summary);
  return kOk;
}

// ---------------------------------------------------------------------------
// reproduce

json load_defaults(const RunConfig& cfg) {
  const std::string path = cfg.defaults.empty() ? ROTCOOL_DEFAULTS_PATH : cfg.defaults;
  std::ifstream f(path);
  if (!f) throw flag_error("--defaults", "cannot read '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw flag_error("--defaults", std::string("'") + path + "': " + e.what());
  }
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw flag_error("--output-dir", "cannot create '" + cfg.output_dir + "'");
  }
  return dir;
}

json reproduce_timing(const json& d, const fs::path& dir, std::ostream& out) {
  const json& t = d.at("timing");
  const CollisionSystem& s = lookup(t.at("system").get<std::string>());
  const json& sch = t.at("schedule_lab_ev");
  const EnergySchedule sched(units::eV_to_hartree(sch.at("e_init").get<double>()),
                             units::eV_to_hartree(sch.at("e_final").get<double>()),
                             units::eV_to_hartree(sch.at("de").get<double>()));
  const BinPoint point = resolve_point(t.at("point").get<std::string>());
  const double d_cc = units::um_to_bohr(t.at("crystal_d_um").get<double>());
  const CoolingTimeReport cc = cooling_time(CoulombCrystal{d_cc}, s, sched, point);
  emit_csv(cooling_table(cc), dir / "timing_crystal.csv");

  const json& ratio = t.at("ratio");
  const double d2 = units::um_to_bohr(ratio.at("crystal_d_um").get<double>());
  const double omega = units::hz_to_au_angular(ratio.at("trap_frequency_hz").get<double>());
  const CoolingTimeReport cc2 = cooling_time(CoulombCrystal{d2}, s, sched, point);
  const CoolingTimeReport sa = cooling_time(SingleAtomTrap{omega}, s, sched, point);
  emit_csv(cooling_table(sa), dir / "timing_single_atom.csv");
  const double sigma1 = sa_sigma(sched.E_init(), s.mu, omega);
  const double geometric = std::pow(sigma1 / d2, 3);
  const double T_cc_s = units::au_time_to_s(cc.T_total);
  const double ratio_value = sa.T_total / cc2.T_total;

  out << "T_CC = " << fmt(T_cc_s * 1e3, 4) << " ms (" << s.name() << ", "
      << fmt(sch.at("e_init").get<double>()) << " -> " << fmt(sch.at("e_final").get<double>())
      << " eV lab, d = " << fmt(t.at("crystal_d_um").get<double>()) << " um)\n";
  out << "T_SA/T_CC = " << fmt(ratio_value, 4) << " (d = "
      << fmt(ratio.at("crystal_d_um").get<double>()) << " um, f = "
      << fmt(ratio.at("trap_frequency_hz").get<double>()) << " Hz), sigma = "
      << fmt(units::bohr_to_um(sigma1), 4) << " um, (sigma/d)^3 = " << fmt(geometric, 4) << '\n';
  return {{"T_CC_s", T_cc_s},
          {"T_CC_ratio_case_s", units::au_time_to_s(cc2.T_total)},
          {"T_SA_s", units::au_time_to_s(sa.T_total)},
          {"ratio", ratio_value},
          {"sigma_um", units::bohr_to_um(sigma1)},
          {"geometric_ratio", geometric}};
}

double peak_b(const CollisionSystem& s, double E, const json& search,
              const PropagationOptions& p, int jobs) {
  const std::vector<double> bs =
      log_grid(search.at("b_min_bohr").get<double>(), search.at("b_max_bohr").get<double>(),
               search.at("points").get<int>());
  std::vector<double> eps(bs.size());
  parallel_for(bs.size(), jobs, [&](std::size_t i) { eps[i] = full_excitation(s, E, bs[i], p); });
  return bs[std::max_element(eps.begin(), eps.end()) - eps.begin()];
}

json reproduce_fig2(const json& d, const fs::path& dir, int jobs, std::ostream& out) {
  const json& f = d.at("fig2");
  const int samples = f.at("samples").get<int>();
  json summary = json::array();
  for (const json& panel : f.at("panels")) {
    const CollisionSystem& s = lookup(panel.at("system").get<std::string>());
    const double E = units::eV_to_hartree(panel.at("e_ev").get<double>());
    const PropagationOptions p;
    const json& bj = panel.at("b_bohr");
    const double b = bj.is_string() ? peak_b(s, E, f.at("b_search"), p, jobs) : bj.get<double>();
    const Trace tr = collision_trace(s, E, b, samples, p);
    const std::string name = panel.at("name").get<std::string>();
    emit_csv(tr.table, dir / ("fig2" + name + ".csv"));
    double peak = 0.0;
    for (const auto& row : tr.result.trace_PJ) peak = std::max(peak, 1.0 - row.front());
    out << "fig2(" << name << ") " << s.name() << " E = " << fmt(panel.at("e_ev").get<double>())
        << " eV, b = " << fmt(b, 4) << " Bohr: peak excited " << fmt(peak, 4) << ", final "
        << fmt(tr.result.excitation, 4) << '\n';
    summary.push_back({{"panel", name},
                       {"system", s.name()},
                       {"b_bohr", b},
                       {"peak_excited", peak},
                       {"excitation", tr.result.excitation}});
  }
  return summary;
}

CycleResult run_cycle(const CollisionSystem& s, double d_bohr, double E_init_eV,
                      double E_final_eV, double dE_eV, CycleOptions opts) {
  const EnergySchedule sched(units::eV_to_hartree(E_init_eV), units::eV_to_hartree(E_final_eV),
                             units::eV_to_hartree(dE_eV));
  return accumulate(s, CoulombCrystal{d_bohr}, sched, opts);
}

json reproduce_fig3(const json& d, const fs::path& dir, int jobs, std::ostream& out) {
  const json& f = d.at("fig3");
  const double d_bohr = f.at("d_bohr").get<double>();
  const double E_final = f.at("e_final_ev").get<double>();
  const json& scan = f.at("b_scan");
  json summary = json::array();
  for (const json& run : f.at("runs")) {
    const CollisionSystem& s = lookup(run.at("system").get<std::string>());
    const double E_init = run.at("e_init_ev").get<double>();
    const std::string tag = file_tag(s.name());
    json entry{{"system", s.name()}};
    for (const char* engine : {"full", "eta2l"}) {
      const json& e = f.at(engine);
      CycleOptions opts;
      opts.engine = parse_engine(engine);
      opts.rule.nodes = e.at("nodes").get<int>();
      opts.jobs = jobs;
      const CycleResult r = run_cycle(s, d_bohr, E_init, E_final, e.at("de_ev").get<double>(), opts);
      emit_csv(cycle_table(r), dir / ("fig3a_" + tag + "_" + engine + ".csv"));
      out << "fig3(a) " << s.name() << ' ' << engine << ": Sigma(" << fmt(E_init)
          << " eV) = " << fmt(r.sigma_mean, 4) << ", 5% crossing " << crossing_text(r) << '\n';
      entry[engine] = cycle_json(s, r);
    }
    std::vector<double> bs{0.0};
    for (double b : log_grid(scan.at("b_min_bohr").get<double>(),
                             scan.at("b_max_bohr").get<double>(), scan.at("points").get<int>())) {
      bs.push_back(b);
    }
    const double E = units::eV_to_hartree(scan.at("e_ev").get<double>());
    emit_csv(b_scan_table(s, E, bs, true, PropagationOptions{}, jobs),
             dir / ("fig3bc_" + tag + ".csv"));
    summary.push_back(entry);
  }
  return summary;
}

json reproduce_fig4(const json& d, const fs::path& dir, int jobs, std::ostream& out) {
  const json& f = d.at("fig4");
  const double d_bohr = f.at("d_bohr").get<double>();
  const double E_final = f.at("e_final_ev").get<double>();
  json summary = json::array();
  for (const json& run : f.at("runs")) {
    const CollisionSystem& s = lookup(run.at("system").get<std::string>());
    const double E_init = run.at("e_init_ev").get<double>();
    json entry{{"system", s.name()}};
    for (const json& ej : run.at("engines")) {
      const std::string engine = ej.get<std::string>();
      const json& e = f.at(engine);
      CycleOptions opts;
      opts.engine = parse_engine(engine);
      opts.rule.nodes = e.at("nodes").get<int>();
      opts.jobs = jobs;
      if (e.contains("polarizability")) {
        opts.propagation.polarizability =
            parse_polarizability_term(e.at("polarizability").get<std::string>());
      }
      const CycleResult r = run_cycle(s, d_bohr, E_init, E_final, e.at("de_ev").get<double>(), opts);
      emit_csv(cycle_table(r), dir / ("fig4_" + file_tag(s.name()) + "_" + engine + ".csv"));
      out << "fig4 " << s.name() << ' ' << engine << ": Sigma(" << fmt(E_init)
          << " eV) = " << fmt(r.sigma_mean, 4) << ", 5% crossing " << crossing_text(r) << '\n';
      entry[engine] = cycle_json(s, r);
    }
    summary.push_back(entry);
  }
  return summary;
}

int cmd_reproduce(const RunConfig& cfg, std::ostream& out) {
  const json d = load_defaults(cfg);
  if (!d.contains(cfg.target)) throw flag_error("--defaults", "no entry for '" + cfg.target + "'");
  if (cfg.dry_run) {
    kv(out, "target", cfg.target);
    kv(out, "defaults_version", std::to_string(d.value("version", 0)));
    out << d.at(cfg.target).dump(2) << '\n';
    return kOk;
  }
  const fs::path dir = output_dir(cfg);
  json summary;
  try {
    if (cfg.target == "timing") summary = reproduce_timing(d, dir, out);
    if (cfg.target == "fig2") summary = reproduce_fig2(d, dir, cfg.jobs, out);
    if (cfg.target == "fig3") summary = reproduce_fig3(d, dir, cfg.jobs, out);
    if (cfg.target == "fig4") summary = reproduce_fig4(d, dir, cfg.jobs, out);
  } catch (const json::exception& e) {
    throw flag_error("--defaults", e.what());
  }
  write_summary({{"target", cfg.target}, {"results", summary}}, cfg.summary);
  return kOk;
}

// ---------------------------------------------------------------------------
// flag wiring

void add_common(CLI::App* sub, RunConfig& cfg, bool with_system = true) {
  if (with_system) {
    sub->add_option("--system", cfg.system, "registry name (MgH+, HD+, N2+, H2+, I2+) or molecule file")
        ->capture_default_str();
  }
  sub->add_option("-o,--output", cfg.output, "CSV file (stdout when omitted)");
  sub->add_option("--summary", cfg.summary, "JSON file with run totals");
  sub->add_flag("--dry-run", cfg.dry_run, "validate and print resolved atomic-unit values");
  sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
}

void add_scenario(CLI::App* sub, RunConfig& cfg) {
  auto* um = sub->add_option("--d-um", cfg.d_um, "crystal spacing in micrometres");
  auto* bohr = sub->add_option("--d-bohr", cfg.d_bohr, "crystal spacing in Bohr");
  auto* hz = sub->add_option("--trap-frequency-hz,--omega-hz", cfg.trap_hz,
                             "single-atom trap frequency f in Hz (omega = 2 pi f)");
  for (auto* o : {um, bohr, hz}) o->check(CLI::PositiveNumber);
  um->excludes(bohr)->excludes(hz);
  bohr->excludes(hz);
}

void add_schedule(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--einit-ev,--einit", cfg.E_init_eV, "initial energy (eV)");
  sub->add_option("--efinal-ev,--efinal", cfg.E_final_eV, "final energy (eV)");
  sub->add_option("--de-ev,--de", cfg.dE_eV, "bin width (eV)");
}

void add_collision(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--e-ev,--e", cfg.E_eV, "CM scattering energy (eV)");
  sub->add_option("--b-bohr,--b", cfg.b_bohr, "impact parameter (Bohr), default 0");
}

void add_propagation(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--field-model", cfg.field_model, "exact | lorentzian")
      ->check(CLI::IsMember({"exact", "lorentzian"}))
      ->capture_default_str();
  sub->add_option("--polarizability", cfg.polarizability, "none | anisotropic | full")
      ->check(CLI::IsMember({"none", "anisotropic", "full"}))
      ->capture_default_str();
  sub->add_option("--jmax", cfg.J_max, "starting rotor basis size (0 = default)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--rtol", cfg.rtol, "relative tolerance")->capture_default_str();
  sub->add_option("--atol", cfg.atol, "absolute tolerance")->capture_default_str();
}

void build(CLI::App& app, RunConfig& cfg) {
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI/TOML file; keys are long flag names inside a [subcommand] section");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_version_flag("--version", "rotcool 1.0");

  auto* ct = app.add_subcommand("cooling-time", "closed-form cooling time (lab energies)");
  add_common(ct, cfg);
  add_scenario(ct, cfg);
  add_schedule(ct, cfg);
  ct->add_option("--point", cfg.point, "bin evaluation point")
      ->check(CLI::IsMember({"upper", "lower", "mean"}))
      ->capture_default_str();

  auto* tr = app.add_subcommand("trajectory", "classical Coulomb trajectory: t, r, beta, eps");
  add_common(tr, cfg);
  add_collision(tr, cfg);
  tr->add_option("--samples", cfg.samples, "time samples")->capture_default_str();

  auto* co = app.add_subcommand("collide", "one collision, P_J(t) traces");
  add_common(co, cfg);
  add_collision(co, cfg);
  add_propagation(co, cfg);
  co->add_option("--samples", cfg.samples, "trace samples")->capture_default_str();

  auto* es = app.add_subcommand("estimate", "nonadiabaticity and perturbative estimates");
  add_common(es, cfg);
  add_scenario(es, cfg);
  add_collision(es, cfg);
  add_propagation(es, cfg);
  es->add_option("--scan", cfg.scan, "b (fixed E) or energy (b-averaged)")
      ->check(CLI::IsMember({"b", "energy"}))
      ->capture_default_str();
  es->add_option("--b-min-bohr", cfg.b_min_bohr)->capture_default_str();
  es->add_option("--b-max-bohr", cfg.b_max_bohr)->capture_default_str();
  es->add_option("--emin-ev", cfg.E_min_eV)->capture_default_str();
  es->add_option("--emax-ev", cfg.E_max_eV)->capture_default_str();
  es->add_option("--points", cfg.points, "grid points")->capture_default_str();
  es->add_option("--nodes", cfg.nodes, "b-quadrature nodes")->capture_default_str();
  es->add_flag("--with-full", cfg.with_full, "add full-propagation excitation (b scan)");

  auto* fk = app.add_subcommand("fit-kappa", "refit f(kappa) to the numerical I(kappa)");
  add_common(fk, cfg, false);
  fk->add_option("--points", cfg.kappa_points, "kappa grid points")->capture_default_str();
  fk->add_option("--cutoff", cfg.kappa_cutoff, "grid ends where I(kappa) drops below this")
      ->capture_default_str();

  auto* cy = app.add_subcommand("cycle", "accumulated excitation over a cooling cycle");
  add_common(cy, cfg);
  add_scenario(cy, cfg);
  add_schedule(cy, cfg);
  add_propagation(cy, cfg);
  cy->add_option("--engine", cfg.engine, "full | pt | eta2l")
      ->check(CLI::IsMember({"full", "pt", "eta2l"}))
      ->capture_default_str();
  cy->add_option("--nodes", cfg.nodes, "b-quadrature nodes")->capture_default_str();
  cy->add_option("--chi-cut", cfg.chi_cut, "full engine b cap (relative coupling)")
      ->capture_default_str();
  cy->add_option("--fit", cfg.fit, "pt engine: none | tabulated | refit")
      ->check(CLI::IsMember({"none", "tabulated", "refit"}))
      ->capture_default_str();

  auto* rp = app.add_subcommand("reproduce", "figure datasets and headline numbers");
  add_common(rp, cfg, false);
  rp->add_option("target", cfg.target, "fig2 | fig3 | fig4 | timing")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "timing"}));
  rp->add_option("--defaults", cfg.defaults, "pinned defaults file");
  rp->add_option("--output-dir", cfg.output_dir, "directory for CSV files")->capture_default_str();
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
  const std::string& c = cfg.subcommand;
  if (c == "cooling-time") return cmd_cooling_time(cfg, out);
  if (c == "trajectory") return cmd_trajectory(cfg, out);
  if (c == "collide") return cmd_collide(cfg, out);
  if (c == "estimate") return cmd_estimate(cfg, out);
  if (c == "fit-kappa") return cmd_fit_kappa(cfg, out);
  if (c == "cycle") return cmd_cycle(cfg, out);
  return cmd_reproduce(cfg, out);
}

}  // namespace

CollisionSystem resolve_system(const RunConfig& cfg) {
  try {
    std::error_code ec;
    if (fs::is_regular_file(cfg.system, ec)) return load_system_file(cfg.system);
    return lookup(cfg.system);
  } catch (const ConfigError& e) {
    throw flag_error("--system", e.what());
  }
}

TrapScenario resolve_scenario(const RunConfig& cfg, double default_d_bohr) {
  const int given = is_set(cfg.d_um) + is_set(cfg.d_bohr) + is_set(cfg.trap_hz);
  if (given > 1) throw flag_error("--d-um/--d-bohr/--trap-frequency-hz", "give exactly one scenario");
  if (is_set(cfg.trap_hz)) {
    return SingleAtomTrap{units::hz_to_au_angular(positive(cfg.trap_hz, "--trap-frequency-hz"))};
  }
  if (is_set(cfg.d_um)) return CoulombCrystal{units::um_to_bohr(positive(cfg.d_um, "--d-um"))};
  if (is_set(cfg.d_bohr)) return CoulombCrystal{positive(cfg.d_bohr, "--d-bohr")};
  return CoulombCrystal{default_d_bohr};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Rotational excitation of molecular ions during sympathetic cooling", "rotcool"};
  build(app, cfg);
  // --config belongs to the top-level app, but users write it after the
  // subcommand; move it in front so both orders work.
  std::vector<std::string> args(argv, argv + argc);
  auto sub = std::find_if(args.begin() + std::min(argc, 1), args.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  std::vector<std::string> moved;
  for (auto it = sub; it != args.end();) {
    if (*it == "--config" && it + 1 != args.end()) {
      moved.insert(moved.end(), it, it + 2);
      it = args.erase(it, it + 2);
    } else if (it->rfind("--config=", 0) == 0) {
      moved.push_back(*it);
      it = args.erase(it);
    } else {
      ++it;
    }
  }
  sub = std::find_if(args.begin() + std::min(argc, 1), args.end(), [&](const std::string& a) {
    return app.get_subcommand_no_throw(a) != nullptr;
  });
  args.insert(sub, moved.begin(), moved.end());
  std::vector<const char*> ptrs;
  for (const auto& a : args) ptrs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  set_warning_handler([&err](std::string_view m) { err << "warning: " << m << '\n'; });
  struct Restore {
    ~Restore() { set_warning_handler({}); }
  } restore;
  try {
    return dispatch(cfg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace rotcool::cli
