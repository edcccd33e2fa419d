#pragma once

#include <functional>
#include <string>
#include <vector>

#include "desense/numeric.hpp"

namespace desense {

/// Uncertain model parameters p (length ℓ ≥ 1, all entries finite).
using ParameterVector = Vector;

/// Linear system matrices as functions of the uncertain parameter vector,
/// with per-parameter derivative stacks and noise covariances.
///
/// TimeT is the epoch index (int, discrete) or time in seconds (double,
/// continuous). Models are time-invariant in this release; the argument is
/// part of the interface so time-varying schedules can be added without
/// breaking callers.
///
/// Model objects are immutable after construction and safe to share across
/// concurrent Monte-Carlo workers.
template <typename TimeT>
struct ParametricModel {
  int state_dim = 0;  // n
  int meas_dim = 0;   // m
  int param_dim = 0;  // ℓ

  std::function<Matrix(const ParameterVector&, TimeT)> phi;  // n×n transition
  std::function<Matrix(const ParameterVector&, TimeT)> h;    // m×n measurement
  /// ∂Φ/∂p_i with i in [0, ℓ).
  std::function<Matrix(const ParameterVector&, int, TimeT)> dphi;
  /// ∂H/∂p_i with i in [0, ℓ).
  std::function<Matrix(const ParameterVector&, int, TimeT)> dh;

  Matrix q;  // n×n process-noise covariance (spectral density if continuous)
  Matrix r;  // m×m measurement-noise covariance (spectral density if continuous)
};

struct ParametricDiscreteModel : ParametricModel<int> {};
struct ParametricContinuousModel : ParametricModel<double> {};

/// Uniform distribution bounds for one uncertain parameter.
struct ParamRange {
  double low = 0.0;
  double high = 0.0;
};

/// The two-state benchmark system plus the constants its experiment uses.
struct BenchmarkSetup {
  ParametricDiscreteModel model;
  ParameterVector p_hat;           // nominal parameter estimate (0, 0)
  Vector x0;                       // initial state [10, -10]
  Matrix p0_cov;                   // initial covariance 0.1·I
  std::vector<ParamRange> param_ranges;  // α ∈ ±0.1, β ∈ ±0.5
  Matrix w_a_reference;            // 90% of the parameter covariance
};

Matrix eval_phi(const ParametricDiscreteModel& model, const ParameterVector& p, int epoch = 0);
Matrix eval_h(const ParametricDiscreteModel& model, const ParameterVector& p, int epoch = 0);
Matrix eval_phi(const ParametricContinuousModel& model, const ParameterVector& p, double t = 0.0);
Matrix eval_h(const ParametricContinuousModel& model, const ParameterVector& p, double t = 0.0);

/// n×ℓ matrix whose column i is (∂Φ/∂p_i)(p) · x.
Matrix phi_jacobian_action(const ParametricDiscreteModel& model, const ParameterVector& p,
                           const Vector& x, int epoch = 0);
Matrix phi_jacobian_action(const ParametricContinuousModel& model, const ParameterVector& p,
                           const Vector& x, double t = 0.0);

/// m×ℓ matrix whose column i is (∂H/∂p_i)(p) · x.
Matrix h_jacobian_action(const ParametricDiscreteModel& model, const ParameterVector& p,
                         const Vector& x, int epoch = 0);
Matrix h_jacobian_action(const ParametricContinuousModel& model, const ParameterVector& p,
                         const Vector& x, double t = 0.0);

/// The two-state discrete benchmark: Φ = [[1, 0.1+α], [β-0.5, 0.9]], H = I,
/// Q = 0.1·I, R = I, x0 = [10, -10], P0 = 0.1·I, p̂ = (0, 0).
BenchmarkSetup make_benchmark();

/// Parameter-independent model built from constant matrices. The derivative
/// stacks are zero; param_dim only sizes the sensitivity bookkeeping.
ParametricDiscreteModel make_constant_discrete_model(const Matrix& phi0, const Matrix& h0,
                                                     const Matrix& q, const Matrix& r,
                                                     int param_dim = 1);
ParametricContinuousModel make_constant_continuous_model(const Matrix& phi0, const Matrix& h0,
                                                         const Matrix& q, const Matrix& r,
                                                         int param_dim = 1);

/// Affine-in-p model: Φ(p) = phi0 + Σ p_i · dphi[i], H(p) = h0 + Σ p_i · dh[i].
/// Pass empty dh for a parameter-independent measurement matrix.
ParametricDiscreteModel make_affine_discrete_model(const Matrix& phi0, const std::vector<Matrix>& dphi,
                                                   const Matrix& h0, const std::vector<Matrix>& dh,
                                                   const Matrix& q, const Matrix& r);
ParametricContinuousModel make_affine_continuous_model(const Matrix& phi0, const std::vector<Matrix>& dphi,
                                                       const Matrix& h0, const std::vector<Matrix>& dh,
                                                       const Matrix& q, const Matrix& r);

/// Replaces the derivative stacks with central finite differences of phi/h,
/// for models whose author has no analytic derivatives.
ParametricDiscreteModel with_fd_derivatives(ParametricDiscreteModel model, double step = 1e-6);
ParametricContinuousModel with_fd_derivatives(ParametricContinuousModel model, double step = 1e-6);

/// Loads a constant-matrix model from a JSON description with keys
/// "phi", "h", "q", "r" (nested row-major arrays) and optional "param_dim".
/// Throws ConfigError on malformed input.
ParametricDiscreteModel load_discrete_model_json(const std::string& json_text);

/// Checks dimensions, finiteness and that q, r are symmetric positive
/// definite. Throws DimensionError / ConfigError on violation.
void validate_model(const ParametricDiscreteModel& model);
void validate_model(const ParametricContinuousModel& model);

}  // namespace desense
