#include "rotcool/angular.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rotcool {

namespace {

constexpr int kMaxFactorial = 170;

const std::array<double, kMaxFactorial + 1>& factorials() {
  static const auto table = [] {
    std::array<double, kMaxFactorial + 1> f{};
    f[0] = 1.0;
    for (int i = 1; i <= kMaxFactorial; ++i) f[i] = f[i - 1] * i;
    return f;
  }();
  return table;
}

double fact(int n) {
  if (n < 0 || n > kMaxFactorial) throw std::out_of_range("factorial argument out of range");
  return factorials()[n];
}

}  // namespace

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;

  const double tri = fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3) /
                     fact(j1 + j2 + j3 + 1);
  const double pre = std::sqrt(tri * fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) *
                               fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3));
  const int k_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int k_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double term = 1.0 / (fact(k) * fact(j1 + j2 - j3 - k) * fact(j1 - m1 - k) *
                               fact(j2 + m2 - k) * fact(j3 - j2 + m1 + k) *
                               fact(j3 - j1 - m2 + k));
    sum += (k % 2 == 0) ? term : -term;
  }
  const int phase = j1 - j2 - m3;
  return ((phase % 2 == 0) ? 1.0 : -1.0) * pre * sum;
}

double ylm_matrix_element(int Jp, int mp, int k, int q, int J, int m) {
  if (mp != q + m) return 0.0;
  if ((Jp + k + J) % 2 != 0) return 0.0;
  const double norm =
      std::sqrt((2.0 * Jp + 1.0) * (2.0 * k + 1.0) * (2.0 * J + 1.0) / (4.0 * std::numbers::pi));
  const double sign = (mp % 2 == 0) ? 1.0 : -1.0;
  return sign * norm * wigner3j(Jp, k, J, 0, 0, 0) * wigner3j(Jp, k, J, -mp, q, m);
}

AngularOperator parse_angular_operator(std::string_view name) {
  for (AngularOperator op : kAllAngularOperators) {
    if (angular_operator_name(op) == name) return op;
  }
  throw std::invalid_argument("unknown angular operator '" + std::string(name) + "'");
}

std::string_view angular_operator_name(AngularOperator op) {
  switch (op) {
    case AngularOperator::cos_theta: return "cos_theta";
    case AngularOperator::sin_theta_cos_phi: return "sin_theta_cos_phi";
    case AngularOperator::cos2_theta: return "cos2_theta";
    case AngularOperator::cos_theta_sin_theta_cos_phi: return "cos_theta_sin_theta_cos_phi";
    case AngularOperator::sin2_theta_cos2_phi: return "sin2_theta_cos2_phi";
  }
  return "?";
}

int angular_rank(AngularOperator op) {
  return (op == AngularOperator::cos_theta || op == AngularOperator::sin_theta_cos_phi) ? 1 : 2;
}

double matrix_element(AngularOperator op, int Jp, int mp, int J, int m) {
  if (J < 0 || Jp < 0 || std::abs(m) > J || std::abs(mp) > Jp) {
    throw std::out_of_range("rotor quantum numbers out of range");
  }
  const double pi = std::numbers::pi;
  auto y = [&](int k, int q) { return ylm_matrix_element(Jp, mp, k, q, J, m); };
  const double delta = (Jp == J && mp == m) ? 1.0 : 0.0;
  switch (op) {
    case AngularOperator::cos_theta:
      return std::sqrt(4.0 * pi / 3.0) * y(1, 0);
    case AngularOperator::sin_theta_cos_phi:
      return std::sqrt(2.0 * pi / 3.0) * (y(1, -1) - y(1, 1));
    case AngularOperator::cos2_theta:
      return delta / 3.0 + (2.0 / 3.0) * std::sqrt(4.0 * pi / 5.0) * y(2, 0);
    case AngularOperator::cos_theta_sin_theta_cos_phi:
      return std::sqrt(2.0 * pi / 15.0) * (y(2, -1) - y(2, 1));
    case AngularOperator::sin2_theta_cos2_phi: {
      const double cos2 = delta / 3.0 + (2.0 / 3.0) * std::sqrt(4.0 * pi / 5.0) * y(2, 0);
      return 0.5 * (delta - cos2) + std::sqrt(2.0 * pi / 15.0) * (y(2, 2) + y(2, -2));
    }
  }
  throw std::invalid_argument("unknown angular operator");
}

RotorBasis::RotorBasis(int J_max) : J_max_(J_max) {
  if (J_max < 0) throw std::invalid_argument("J_max must be non-negative");
}

std::size_t RotorBasis::index(int J, int m) const {
  if (J < 0 || J > J_max_ || std::abs(m) > J) throw std::out_of_range("(J, m) outside basis");
  return static_cast<std::size_t>(J * J + (m + J));
}

std::pair<int, int> RotorBasis::quantum_numbers(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("basis index out of range");
  const int J = static_cast<int>(std::sqrt(static_cast<double>(i)));
  // guard against sqrt rounding
  int JJ = J;
  while ((JJ + 1) * (JJ + 1) <= static_cast<int>(i)) ++JJ;
  while (JJ * JJ > static_cast<int>(i)) --JJ;
  return {JJ, static_cast<int>(i) - JJ * JJ - JJ};
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) {
    if (col[k] == j) return val[k];
  }
  return 0.0;
}

double SparseMatrix::asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = row_start[i]; k < row_start[i + 1]; ++k) {
      worst = std::max(worst, std::abs(val[k] - at(col[k], i)));
    }
  }
  return worst;
}

CouplingMatrices::CouplingMatrices(const RotorBasis& basis) : basis_(basis) {
  const std::size_t n = basis.size();
  struct Entry {
    std::size_t col;
    std::array<double, 5> v;
  };
  std::vector<std::vector<Entry>> rows(n);
  // each pair evaluated once (i <= j) and mirrored, so symmetry is exact
  for (std::size_t i = 0; i < n; ++i) {
    const auto [Jp, mp] = basis.quantum_numbers(i);
    for (int J = std::max(0, Jp - 2); J <= std::min(basis.J_max(), Jp + 2); ++J) {
      for (int m = std::max(-J, mp - 2); m <= std::min(J, mp + 2); ++m) {
        const std::size_t j = basis.index(J, m);
        if (j < i) continue;
        Entry e{j, {}};
        bool any = false;
        for (AngularOperator op : kAllAngularOperators) {
          double x = matrix_element(op, Jp, mp, J, m);
          if (std::abs(x) < 1e-15) x = 0.0;
          e.v[static_cast<std::size_t>(op)] = x;
          any = any || x != 0.0;
        }
        if (!any) continue;
        rows[i].push_back(e);
        if (j != i) rows[j].push_back({i, e.v});
      }
    }
  }
  row_start_.assign(1, 0);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
    for (const Entry& e : row) {
      col_.push_back(e.col);
      for (std::size_t k = 0; k < 5; ++k) values_[k].push_back(e.v[k]);
    }
    row_start_.push_back(col_.size());
  }
}

SparseMatrix CouplingMatrices::matrix(AngularOperator op) const {
  SparseMatrix m;
  m.n = size();
  m.row_start.assign(1, 0);
  const auto& v = values(op);
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t k = row_start_[i]; k < row_start_[i + 1]; ++k) {
      if (v[k] != 0.0) {
        m.col.push_back(col_[k]);
        m.val.push_back(v[k]);
      }
    }
    m.row_start.push_back(m.col.size());
  }
  return m;
}

}  // namespace rotcool
