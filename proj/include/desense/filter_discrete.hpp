#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "desense/model.hpp"
#include "desense/numeric.hpp"

namespace desense {

/// Filter state after a time or measurement update.
/// p_cov stays symmetric PSD; column i of s is the sensitivity of xhat to
/// parameter i.
struct FilterState {
  Vector xhat;   // n
  Matrix p_cov;  // n×n
  Matrix s;      // n×ℓ
  int epoch = 0;
};

/// Minimum-variance gain, no sensitivity penalty.
struct Conventional {};

/// Stacked-sensitivity penalty Tr(S W_a Sᵀ) with ℓ×ℓ weighting w_a.
struct Adkf {
  Matrix w_a;
};

/// Per-parameter penalties Σ σ_iᵀ W_i σ_i with n×n weightings w_list[i].
struct Ksdkf {
  std::vector<Matrix> w_list;
};

using WeightingScheme = std::variant<Conventional, Adkf, Ksdkf>;

/// Per-epoch diagnostics. cost_total = trace_p + cost_penalty, where the cost
/// follows the scheme the step was run with (penalty 0 for Conventional).
struct StepRecord {
  Matrix gain;        // n×m
  Vector innovation;  // m
  Matrix gamma;       // m×ℓ
  double cost_total = 0.0;
  double cost_penalty = 0.0;
  double trace_p = 0.0;
};

/// Fresh state at epoch 0: x0 estimate, p0 covariance, zero sensitivities.
FilterState make_initial_state(const Vector& x0, const Matrix& p0, int param_dim);

/// Propagates estimate, covariance and sensitivities one epoch forward:
/// xhat ← Φ̄·xhat, P ← Φ̄PΦ̄ᵀ + Q (symmetrized), S ← Φ̄S + (∂Φ̄/∂p)·xhat.
FilterState time_update(const FilterState& state, const ParametricDiscreteModel& model,
                        const ParameterVector& p_hat);

/// Measurement sensitivity γ = H̄S⁻ + (∂H̄/∂p)·x̂⁻ (m×ℓ); column i is the
/// per-parameter γ_i.
Matrix innovation_matrix(const FilterState& prior, const ParametricDiscreteModel& model,
                         const ParameterVector& p_hat);

/// Minimum-variance gain K = P⁻H̄ᵀ(H̄P⁻H̄ᵀ + R)⁻¹ by linear solve.
Matrix gain_kf(const FilterState& prior, const ParametricDiscreteModel& model,
               const ParameterVector& p_hat);

/// Closed-form desensitized gain
/// K = (P⁻H̄ᵀ + S⁻W_aγᵀ)(H̄P⁻H̄ᵀ + R + γW_aγᵀ)⁻¹; equals gain_kf when w_a = 0.
Matrix gain_adkf(const FilterState& prior, const Matrix& gamma, const Matrix& w_a,
                 const ParametricDiscreteModel& model, const ParameterVector& p_hat);

/// Per-parameter-weighted gain solving
///   K Ξ̄ + Σ_i W_i K γ_iγ_iᵀ = P⁻H̄ᵀ + Σ_i W_i σ⁻_i γ_iᵀ
/// via Kronecker vectorization into a dense (nm)×(nm) system.
Matrix gain_ksdkf(const FilterState& prior, const Matrix& gamma, const std::vector<Matrix>& w_list,
                  const ParametricDiscreteModel& model, const ParameterVector& p_hat);

/// Blends prior and measurement with the supplied gain. Covariance uses the
/// Joseph form (valid for any gain); S⁺ = S⁻ − Kγ. The record carries cost
/// values for the given scheme.
std::pair<FilterState, StepRecord> measurement_update(const FilterState& prior, const Matrix& gain,
                                                      const Vector& z,
                                                      const ParametricDiscreteModel& model,
                                                      const ParameterVector& p_hat,
                                                      const WeightingScheme& scheme);

/// (total, penalty) with penalty = Tr(S⁺ W_a S⁺ᵀ), total = Tr(P⁺) + penalty.
std::pair<double, double> cost_adkf(const FilterState& posterior, const Matrix& w_a);

/// (total, penalty) with penalty = Σ_i σ⁺_iᵀ W_i σ⁺_i over columns of S⁺.
std::pair<double, double> cost_ksdkf(const FilterState& posterior, const std::vector<Matrix>& w_list);

/// One full predict–update cycle dispatching the gain on `scheme`.
std::pair<FilterState, StepRecord> step(const FilterState& state, const Vector& z,
                                        const ParametricDiscreteModel& model,
                                        const ParameterVector& p_hat,
                                        const WeightingScheme& scheme);

/// Validates that a weighting scheme is usable with the given model:
/// symmetric PSD weights of the right dimensions. Throws ConfigError.
void validate_scheme(const WeightingScheme& scheme, int state_dim, int param_dim,
                     const std::string& name = "scheme");

}  // namespace desense
