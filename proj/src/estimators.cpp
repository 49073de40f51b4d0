#include "rotcool/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "rotcool/errors.hpp"
#include "rotcool/quadrature.hpp"
#include "rotcool/trajectory.hpp"
#include "rotcool/units.hpp"

namespace rotcool {

double kappa(const MoleculeSpec& molecule, double mu, double E) {
  return lorentzian_tau(E, mu) * molecule.B;
}

ChiParameters chi_parameters(const CollisionSystem& system, double E, double b) {
  const auto g = CollisionGeometry::make(E, b, system.mu);
  const MoleculeSpec& m = system.molecule;
  ChiParameters p;
  p.chi_D = m.D * g.eps0 / m.B;
  p.chi_alpha = m.delta_alpha * g.eps0 * g.eps0 / (4.0 * m.B);
  p.chi_Q = 3.0 * m.Q_Z * std::pow(g.eps0, 1.5) / (4.0 * m.B);
  p.kappa = g.tau * m.B;
  return p;
}

namespace {

void require_polar(const CollisionSystem& system) {
  if (!system.is_polar()) {
    throw ConfigError("non-adiabaticity estimate needs a polar molecule, got " + system.name());
  }
}

}  // namespace

Nonadiabaticity nonadiabaticity_exact(const CollisionSystem& system, const CollisionField& field,
                                      double t, const NonadiabaticityOptions& opts) {
  require_polar(system);
  static thread_local std::unique_ptr<CouplingMatrices> cm;
  if (!cm || cm->basis().J_max() != opts.J_max) cm = std::make_unique<CouplingMatrices>(RotorBasis(opts.J_max));
  const auto p = field.at(t);
  const MoleculeSpec& mol = system.molecule;
  const Eigen::MatrixXd H = build_hamiltonian(mol, *cm, p.eps, p.beta);

  const InteractionTerms rates = interaction_rates(mol, p.eps, p.beta, p.eps_rate, p.beta_rate);
  const std::size_t n = cm->size();
  Eigen::MatrixXd Hdot = Eigen::MatrixXd::Zero(n, n);
  for (AngularOperator op : kAllAngularOperators) {
    const double f = rates.op[static_cast<std::size_t>(op)];
    if (f == 0.0) continue;
    const auto& v = cm->values(op);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = cm->row_start()[i]; k < cm->row_start()[i + 1]; ++k) Hdot(i, cm->col()[k]) += f * v[k];
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Eigen::VectorXd& w = es.eigenvalues();
  const Eigen::MatrixXd& V = es.eigenvectors();
  Nonadiabaticity out;
  out.gap_10 = w(1) - w(0);
  if (out.gap_10 < opts.min_gap * mol.B) {
    std::ostringstream msg;
    msg << "near-degenerate ground level: gap " << out.gap_10 << " Hartree at t=" << t;
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd h0 = Hdot * V.col(0);
  auto eta = [&](int i) {
    const double g = w(i) - w(0);
    return V.col(i).dot(h0) / (g * g);
  };
  // first excited level, degenerate partners folded in
  const double tol = 1e-9 * mol.B + 1e-12 * std::abs(w(1));
  double s10 = 0.0;
  for (int i = 1; i < static_cast<int>(n) && w(i) - w(1) <= tol; ++i) s10 += eta(i) * eta(i);
  out.eta_10 = std::sqrt(s10);
  double sm = 0.0;
  for (int i = 1; i <= 3 && i < static_cast<int>(n); ++i) sm += eta(i) * eta(i);
  out.eta_manifold = std::sqrt(sm);
  return out;
}

Nonadiabaticity nonadiabaticity_exact(const CollisionSystem& system, double E, double b, double t,
                                      const NonadiabaticityOptions& opts) {
  const auto field = CollisionField::make(E, b, system.mu, opts.field_model);
  return nonadiabaticity_exact(system, field, t, opts);
}

double peak_nonadiabaticity(const CollisionSystem& system, double E, double b,
                            const NonadiabaticityOptions& opts, int samples) {
  require_polar(system);
  const auto field = CollisionField::make(E, b, system.mu, opts.field_model);
  const double tau = field.geometry().tau;
  const double lo = 1e-3 * tau, hi = std::min(field.t_max(), 20.0 * tau);
  double best = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = lo * std::pow(hi / lo, static_cast<double>(i) / (samples - 1));
    // the measure is even in t up to the sign of beta_dot terms; sample both sides
    best = std::max(best, nonadiabaticity_exact(system, field, t, opts).eta_manifold);
    best = std::max(best, nonadiabaticity_exact(system, field, -t, opts).eta_manifold);
  }
  return best;
}

double nonadiabaticity_2level(const CollisionSystem& system, double E, double b) {
  require_polar(system);
  const ChiParameters chi = chi_parameters(system, E, b);
  const double x = chi.chi_D / (2.0 * std::sqrt(3.0));
  return chi.chi_D / (4.0 * chi.kappa * (1.0 + x * x)) / std::sqrt(3.0);
}

double nonadiabaticity_2level_at(const CollisionSystem& system, double E, double b, double t) {
  require_polar(system);
  const auto g = CollisionGeometry::make(E, b, system.mu);
  const MoleculeSpec& m = system.molecule;
  const double coupling = m.D * std::abs(lorentzian_field_rate(g, t)) / std::sqrt(3.0);
  const double s = 2.0 * m.D * lorentzian_field(g, t) / std::sqrt(3.0);
  return coupling / (4.0 * m.B * m.B + s * s);
}

KappaIntegral kappa_integral(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  if (kappa == 0.0) return {{2.0, 0.0}};
  // I = 2 int_0^inf cos(k x) g(x) dx, g = (1 + x^2)^{-3/2}, after x = tan u;
  // the odd (imaginary) part vanishes.
  const double k = 3.0 * kappa;
  auto g = [](double x) { return std::pow(1.0 + x * x, -1.5); };
  auto g1 = [](double x) { return -3.0 * x * std::pow(1.0 + x * x, -2.5); };
  auto g2 = [](double x) { return (12.0 * x * x - 3.0) * std::pow(1.0 + x * x, -3.5); };
  // cut-off where the next asymptotic tail term drops below 1e-13
  double X = 4.0;
  while (std::abs(g2(X)) / (k * k * k) > 1e-13) X *= 1.25;
  const GaussRule unit = gauss_legendre(16);
  const double half_period = std::numbers::pi / k;
  double sum = 0.0, x = 0.0;
  while (x < X) {
    const double h = std::min({half_period, std::max(0.25, 0.25 * x), X - x});
    double part = 0.0;
    for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
      const double xi = x + 0.5 * h * (unit.nodes[i] + 1.0);
      part += unit.weights[i] * std::cos(k * xi) * g(xi);
    }
    sum += 0.5 * h * part;
    x += h;
  }
  // integration by parts for the tail
  const double tail = -g(X) * std::sin(k * X) / k - g1(X) * std::cos(k * X) / (k * k);
  return {{2.0 * (sum + tail), 0.0}};
}

KappaIntegral kappa_integral_time(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  // tau = 1, B = kappa: (1/4) int cos(6 kappa t) / (t^2 + 1/4)^{3/2} dt
  auto f = [](double t) { return 0.25 * std::pow(t * t + 0.25, -1.5); };
  if (kappa == 0.0) {
    // int_0^inf (t^2 + a^2)^{-3/2} dt = 1 / a^2
    return {{2.0 * 0.25 * 4.0, 0.0}};
  }
  boost::math::quadrature::ooura_fourier_cos<double> integrator(1e-12);
  const auto [value, err] = integrator.integrate(f, 6.0 * kappa);
  return {{2.0 * value, 0.0}};
}

KappaFit KappaFit::tabulated() { return {6.83, 0.40, 2.93, 0.0, 0}; }
KappaFit KappaFit::estimated() { return {6.0, 0.5, 3.0, 0.0, 0}; }

double KappaFit::operator()(double k) const {
  return 2.0 * std::pow(1.0 + a1 * k, a2) * std::exp(-a3 * k);
}

double KappaFit::squared(double k) const {
  return 4.0 * std::pow(1.0 + a1 * k, 2.0 * a2) * std::exp(-2.0 * a3 * k);
}

std::pair<double, double> kappa_range(std::span<const CollisionSystem> systems, double E_lo,
                                      double E_hi) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& s : systems) {
    // kappa decreases with E
    lo = std::min(lo, kappa(s.molecule, s.mu, E_hi));
    hi = std::max(hi, kappa(s.molecule, s.mu, E_lo));
  }
  return {lo, hi};
}

std::vector<double> default_kappa_grid(std::size_t points, double cutoff) {
  const auto& reg = builtin_registry();
  auto [lo, hi] = kappa_range(reg, units::eV_to_hartree(0.05), units::eV_to_hartree(10.0));
  // beyond the cut the integral is numerically zero and carries no shape information
  double k_cut = lo;
  while (k_cut < hi && kappa_integral(k_cut).value.real() > cutoff) k_cut += 0.01;
  hi = std::min(hi, k_cut);
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  return grid;
}

namespace {

struct KappaResidual : Eigen::DenseFunctor<double> {
  std::vector<double> k, y;
  KappaResidual(std::vector<double> kk, std::vector<double> yy)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(kk.size())), k(std::move(kk)), y(std::move(yy)) {}

  static double base(double a1, double kk) { return std::max(1.0 + a1 * kk, 1e-300); }

  int operator()(const InputType& a, ValueType& r) const {
    for (std::size_t i = 0; i < k.size(); ++i) {
      r(i) = 2.0 * std::pow(base(a(0), k[i]), a(1)) * std::exp(-a(2) * k[i]) - y[i];
    }
    return 0;
  }
  int df(const InputType& a, JacobianType& J) const {
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double bb = base(a(0), k[i]);
      const double f = 2.0 * std::pow(bb, a(1)) * std::exp(-a(2) * k[i]);
      J(i, 0) = f * a(1) * k[i] / bb;
      J(i, 1) = f * std::log(bb);
      J(i, 2) = -k[i] * f;
    }
    return 0;
  }
};

}  // namespace

KappaFit fit_kappa(std::span<const double> grid) {
  if (grid.size() < 3) throw ConfigError("kappa fit needs at least 3 grid points");
  std::vector<double> k(grid.begin(), grid.end()), y;
  for (double kk : k) {
    if (!(kk >= 0.0)) throw ConfigError("kappa grid must be non-negative");
    y.push_back(kappa_integral(kk).value.real());
  }
  KappaResidual functor(k, y);
  Eigen::LevenbergMarquardt<KappaResidual> lm(functor);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(2000);
  const KappaFit start = KappaFit::estimated();
  Eigen::VectorXd a(3);
  a << start.a1, start.a2, start.a3;
  const auto status = lm.minimize(a);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == ImproperInputParameters || status == TooManyFunctionEvaluation ||
      status == UserAsked || !a.allFinite()) {
    throw NumericalError("kappa fit did not converge (status " + std::to_string(static_cast<int>(status)) + ")");
  }
  KappaFit fit{a(0), a(1), a(2), 0.0, static_cast<int>(lm.iterations())};
  double ss = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) ss += std::pow(fit(k[i]) - y[i], 2);
  fit.rms_residual = std::sqrt(ss / k.size());
  return fit;
}

PtAmplitude pt_amplitude(const CollisionSystem& system, double E, double b) {
  const ChiParameters chi = chi_parameters(system, E, b);
  const double I = kappa_integral(chi.kappa).value.real();
  const double m20 = matrix_element(AngularOperator::cos2_theta, 2, 0, 0, 0);
  // chi_Q B (tau/2)^3 int ... = chi_Q (kappa / 2) I
  return {{0.0, chi.chi_Q * 0.5 * chi.kappa * I * m20}};
}

ChiQ2Average averaged_chiQ2(const CollisionSystem& system, double E, double d) {
  if (!(E > 0.0) || !(d > 0.0)) throw ConfigError("averaged chi_Q^2 needs E > 0 and d > 0");
  const double b_max = 0.5 * d;
  const double a = 0.5 / E;
  if (b_max < 10.0 * a) {
    warn("b_max is not large compared with 1/(2E); closed-form <chi_Q^2> is degraded");
  }
  const MoleculeSpec& m = system.molecule;
  const double pref = std::pow(3.0 * m.Q_Z / (4.0 * m.B), 2);
  ChiQ2Average out;
  out.closed_form = pref * 3.0 / (10.0 * b_max * b_max) * std::pow(E, 4);
  // b = a sinh v: eps0^3 b db = a^-4 sinh v cosh v / (1 + cosh v)^6 dv
  auto f = [](double v) {
    const double c = std::cosh(v);
    return std::sinh(v) * c / std::pow(1.0 + c, 6);
  };
  const double v_max = std::asinh(b_max / a);
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, v_max, 20, 1e-13);
  out.quadrature = pref * 2.0 / (b_max * b_max) * I / std::pow(a, 4);
  return out;
}

double pt_cycle_excitation(const CollisionSystem& system, double d, const EnergySchedule& schedule,
                           const KappaFit& fit, BinPoint point) {
  const TrapScenario cc = CoulombCrystal{d};
  const MoleculeSpec& m = system.molecule;
  const double b_max = 0.5 * d;
  double sigma = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const double E = schedule.point(i, point);
    const double n = schedule.width(i) / mean_energy_loss(cc, system, E);
    const double chi2 = std::pow(3.0 * m.Q_Z / (4.0 * m.B), 2) * 3.0 / (10.0 * b_max * b_max) * std::pow(E, 4);
    const double k = kappa(m, system.mu, E);
    sigma += n * chi2 * k * k * fit.squared(k) / 45.0;
  }
  return sigma;
}

}  // namespace rotcool
