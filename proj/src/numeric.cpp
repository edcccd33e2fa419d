#include "desense/numeric.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

#include "desense/errors.hpp"

namespace desense {

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix solve_sym(const Matrix& a, const Matrix& b, const std::string& context) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw DimensionError(context + ": solve expects square A with matching B, got A " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", B " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Eigen::LDLT<Matrix> ldlt(a);
  double rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !(rcond > 0.0) || 1.0 / rcond > kConditionLimit) {
    double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw SingularMatrixError(context + ": matrix numerically singular (condition estimate " +
                                  std::to_string(cond) + ")",
                              cond);
  }
  return ldlt.solve(b);
}

Matrix solve_sym_right(const Matrix& b, const Matrix& a, const std::string& context) {
  // X A = B  <=>  Aᵀ Xᵀ = Bᵀ, and A is symmetric here.
  return solve_sym(a, b.transpose(), context).transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

double min_eigenvalue_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double relative_asymmetry(const Matrix& a) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

bool is_psd(const Matrix& a, double sym_tol, double eig_tol) {
  if (a.rows() != a.cols() || !all_finite(a)) return false;
  if (relative_asymmetry(a) > sym_tol) return false;
  double floor = -eig_tol * std::max(a.trace(), 0.0);
  return min_eigenvalue_sym(a) >= floor;
}

}  // namespace desense
