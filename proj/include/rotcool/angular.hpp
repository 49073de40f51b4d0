#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

namespace rotcool {

// Wigner 3j symbol for integer angular momenta (Racah formula).
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

// <J' m'| Y_kq |J m> with Condon-Shortley phases; real.
double ylm_matrix_element(int Jp, int mp, int k, int q, int J, int m);

// Angular factors appearing in the dipole, polarizability and quadrupole
// couplings. theta/phi are the molecular-axis angles in the space frame whose
// z axis is the incoming field direction and whose xz plane is the
// scattering plane.
enum class AngularOperator {
  cos_theta,
  sin_theta_cos_phi,
  cos2_theta,
  cos_theta_sin_theta_cos_phi,
  sin2_theta_cos2_phi,
};
inline constexpr std::array<AngularOperator, 5> kAllAngularOperators{
    AngularOperator::cos_theta, AngularOperator::sin_theta_cos_phi, AngularOperator::cos2_theta,
    AngularOperator::cos_theta_sin_theta_cos_phi, AngularOperator::sin2_theta_cos2_phi};

AngularOperator parse_angular_operator(std::string_view name);
std::string_view angular_operator_name(AngularOperator op);
// Tensor rank of the operator's anisotropic part (1 or 2).
int angular_rank(AngularOperator op);

// <J' m'| op |J m>; throws std::out_of_range for negative J or |m| > J.
double matrix_element(AngularOperator op, int Jp, int mp, int J, int m);

// Flat index over |J m>, 0 <= J <= J_max, -J <= m <= J, ordered by J then m.
class RotorBasis {
 public:
  explicit RotorBasis(int J_max);
  int J_max() const { return J_max_; }
  std::size_t size() const { return static_cast<std::size_t>((J_max_ + 1) * (J_max_ + 1)); }
  std::size_t index(int J, int m) const;
  std::pair<int, int> quantum_numbers(std::size_t i) const;

 private:
  int J_max_;
};

// Compressed sparse row, real.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_start;  // n + 1 entries
  std::vector<std::size_t> col;
  std::vector<double> val;

  std::size_t nnz() const { return val.size(); }
  double at(std::size_t i, std::size_t j) const;
  // max |A_ij - A_ji|
  double asymmetry() const;
};

// Every angular operator on a common sparsity pattern (the union of all
// five), so a time-dependent combination can be formed entry by entry.
class CouplingMatrices {
 public:
  explicit CouplingMatrices(const RotorBasis& basis);

  const RotorBasis& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  const std::vector<std::size_t>& row_start() const { return row_start_; }
  const std::vector<std::size_t>& col() const { return col_; }
  const std::vector<double>& values(AngularOperator op) const {
    return values_[static_cast<std::size_t>(op)];
  }
  SparseMatrix matrix(AngularOperator op) const;

 private:
  RotorBasis basis_;
  std::vector<std::size_t> row_start_;
  std::vector<std::size_t> col_;
  std::array<std::vector<double>, 5> values_;
};

}  // namespace rotcool
