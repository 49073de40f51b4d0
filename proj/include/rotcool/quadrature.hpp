#pragma once

#include <vector>

namespace rotcool {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

// Composite Gauss-Legendre: `panels` equal panels of `order` points each.
template <class F>
double integrate_composite(F&& f, double a, double b, int panels, int order = 16) {
  const GaussRule unit = gauss_legendre(order);
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    double part = 0.0;
    for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
      part += unit.weights[i] * f(lo + 0.5 * h * (unit.nodes[i] + 1.0));
    }
    sum += 0.5 * h * part;
  }
  return sum;
}

}  // namespace rotcool
