#pragma once

#include <functional>
#include <vector>

#include "desense/model.hpp"

namespace desense {

/// A recorded gain/measurement sequence to be replayed at a perturbed
/// parameter. Gains stay fixed during replay, realizing the ∂K/∂p = 0
/// assumption the sensitivity recursion is built on.
struct FrozenGainReplay {
  std::vector<Matrix> gains;         // one n×m gain per epoch
  std::vector<Vector> measurements;  // one m-vector per epoch
  ParameterVector p_perturbed;
};

/// Posterior estimates x̂⁺_1..x̂⁺_N from replaying the recorded gains and
/// measurements with the model evaluated at parameter p.
std::vector<Vector> replay_frozen_gains(const ParametricDiscreteModel& model,
                                        const ParameterVector& p, const Vector& x0,
                                        const std::vector<Matrix>& gains,
                                        const std::vector<Vector>& measurements);

/// Finite-difference sensitivity oracle: column i of the epoch-k result is
///   [x̂_k(p̂ + δe_i) − x̂_k(p̂ − δe_i)] / (2δ)
/// where both replays reuse the same recorded gains and measurements.
/// Independent of the filter's analytic sensitivity recursion.
std::vector<Matrix> fd_sensitivity(const ParametricDiscreteModel& model,
                                   const ParameterVector& p_hat, const Vector& x0,
                                   const std::vector<Matrix>& gains,
                                   const std::vector<Vector>& measurements, double delta = 1e-6);

/// Entrywise central difference of a scalar cost over gain matrices at K.
Matrix fd_cost_gradient(const std::function<double(const Matrix&)>& cost, const Matrix& k,
                        double eps = 1e-6);

}  // namespace desense
