#pragma once

#include "desense/filter_discrete.hpp"
#include "desense/model.hpp"

namespace desense {

struct ContinuousFilterState {
  double t = 0.0;
  Vector xhat;   // n
  Matrix p_cov;  // n×n
  Matrix s;      // n×ℓ
};

/// Fixed-step RK4 is the only method this release.
struct IntegratorConfig {
  double dt = 0.01;
};

ContinuousFilterState make_initial_continuous_state(const Vector& x0, const Matrix& p0,
                                                    int param_dim, double t0 = 0.0);

/// Desensitized continuous gain K = (PH̄ᵀ + S W_a γᵀ) R⁻¹ with
/// γ = H̄S + (∂H̄/∂p)x̂. Reduces to the Kalman–Bucy gain PH̄ᵀR⁻¹ at w_a = 0.
Matrix continuous_gain_adkf(const Matrix& p_cov, const Matrix& s, const Matrix& gamma,
                            const Matrix& w_a, const Matrix& h_bar, const Matrix& r);

/// Per-parameter variant K = (PH̄ᵀ + Σ_i W_i σ_i γ_iᵀ) R⁻¹ over columns of
/// s and gamma.
Matrix continuous_gain_ksdkf(const Matrix& p_cov, const Matrix& s, const Matrix& gamma,
                             const std::vector<Matrix>& w_list, const Matrix& h_bar,
                             const Matrix& r);

struct ContinuousDerivatives {
  Vector dxhat;
  Matrix dp_cov;
  Matrix ds;
};

/// Right-hand side of the coupled (x̂, P, S) filter ODEs at the current state:
///   dx̂ = Φ̄x̂ + K(z − H̄x̂)
///   dP = (Φ̄−KH̄)P + P(Φ̄−KH̄)ᵀ + Q + KRKᵀ
///   dS = Φ̄S + (∂Φ̄/∂p)x̂ − Kγ
/// with K chosen per scheme.
ContinuousDerivatives derivatives(const ContinuousFilterState& state, const Vector& z,
                                  const ParametricContinuousModel& model,
                                  const ParameterVector& p_hat, const WeightingScheme& scheme);

/// One RK4 step with z held constant across the step; P symmetrized after.
ContinuousFilterState integrate_step(const ContinuousFilterState& state, const Vector& z,
                                     const ParametricContinuousModel& model,
                                     const ParameterVector& p_hat, const WeightingScheme& scheme,
                                     const IntegratorConfig& cfg);

}  // namespace desense
