#pragma once

// Reference computations that share no code with the library: sphere
// quadrature for angular matrix elements, the analytic repulsive-Coulomb
// hyperbola, the Bessel closed form of the kappa integral, and a time-domain
// first-order amplitude with a rotating field direction.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

inline std::complex<double> ylm(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  // std::sph_legendre includes the Condon-Shortley phase and the normalisation
  const double y = std::sph_legendre(l, am, theta);
  std::complex<double> v = y * std::polar(1.0, am * phi);
  if (m < 0) v = std::conj(v) * ((am % 2) ? -1.0 : 1.0);
  return v;
}

// <Jp mp| f(theta, phi) |J m> by Gauss-Legendre in cos(theta) times the
// trapezoid rule in phi (exact for the trigonometric polynomials involved).
inline std::complex<double> sphere_element(const std::function<double(double, double)>& f, int Jp,
                                           int mp, int J, int m) {
  constexpr int n_phi = 64;
  using GL = boost::math::quadrature::gauss<double, 40>;
  std::complex<double> sum = 0.0;
  const auto& x = GL::abscissa();
  const auto& w = GL::weights();
  auto at_x = [&](double c, double wx) {
    const double theta = std::acos(c);
    for (int k = 0; k < n_phi; ++k) {
      const double phi = 2.0 * pi * k / n_phi;
      sum += wx * (2.0 * pi / n_phi) * std::conj(ylm(Jp, mp, theta, phi)) * f(theta, phi) *
             ylm(J, m, theta, phi);
    }
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    at_x(x[i], w[i]);
    if (x[i] != 0.0) at_x(-x[i], w[i]);
  }
  return sum;
}

// I(kappa) = int cos u exp(i 3 kappa tan u) du = 2 (3 kappa) K_1(3 kappa).
inline double kappa_integral_bessel(double kappa) {
  if (kappa == 0.0) return 2.0;
  const double a = 3.0 * kappa;
  return 2.0 * a * std::cyl_bessel_k(1.0, a);
}

template <class F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

// Repulsive Coulomb hyperbola (charges +1, reduced mass mu), focus at the
// origin: r = A (e cosh s + 1), t = sqrt(mu A^3) (e sinh s + s), A = 1/(2E).
struct Hyperbola {
  double A, e, mu;

  Hyperbola(double E, double b, double mu_) : A(0.5 / E), e(std::hypot(1.0, 2.0 * E * b)), mu(mu_) {}

  double s_of_t(double t) const {
    const double scale = std::sqrt(mu * A * A * A);
    double s = std::asinh(t / (scale * e));
    for (int i = 0; i < 100; ++i) {
      const double g = scale * (e * std::sinh(s) + s) - t;
      const double dg = scale * (e * std::cosh(s) + 1.0);
      const double ds = g / dg;
      s -= ds;
      if (std::abs(ds) < 1e-15 * (1.0 + std::abs(s))) break;
    }
    return s;
  }
  double r(double t) const { return A * (e * std::cosh(s_of_t(t)) + 1.0); }
  // Polar angle swept since the incoming asymptote.
  double swept_angle(double t) const {
    const double s = s_of_t(t);
    const double x = A * (std::cosh(s) + e);
    const double y = A * std::sqrt(e * e - 1.0) * std::sinh(s);
    return std::atan2(y, x) + std::atan(std::sqrt(e * e - 1.0));
  }
  double total_sweep() const { return 2.0 * std::atan(std::sqrt(e * e - 1.0)); }
};

}  // namespace oracle
