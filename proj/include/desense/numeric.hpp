#pragma once

#include <Eigen/Dense>

#include <string>

namespace desense {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Condition-number limit beyond which solves raise SingularMatrixError.
inline constexpr double kConditionLimit = 1e12;

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

/// Solves A X = B for symmetric A by LDLT factor-and-solve.
/// Raises SingularMatrixError (with the condition estimate) when the
/// estimated condition number exceeds kConditionLimit.
Matrix solve_sym(const Matrix& a, const Matrix& b, const std::string& context);

/// Solves X A = B for symmetric A, i.e. X = B A^{-1} without forming A^{-1}.
Matrix solve_sym_right(const Matrix& b, const Matrix& a, const std::string& context);

/// Kronecker product a (p×q) ⊗ b (r×s) -> (pr×qs).
Matrix kron(const Matrix& a, const Matrix& b);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue_sym(const Matrix& a);

/// Max-norm of the antisymmetric part, relative to the matrix scale.
double relative_asymmetry(const Matrix& a);

/// Symmetric within `sym_tol` (relative) and min eigenvalue ≥ -eig_tol·trace.
bool is_psd(const Matrix& a, double sym_tol = 1e-10, double eig_tol = 1e-10);

}  // namespace desense
