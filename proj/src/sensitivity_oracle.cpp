#include "desense/sensitivity_oracle.hpp"

#include "desense/errors.hpp"

namespace desense {

std::vector<Vector> replay_frozen_gains(const ParametricDiscreteModel& model,
                                        const ParameterVector& p, const Vector& x0,
                                        const std::vector<Matrix>& gains,
                                        const std::vector<Vector>& measurements) {
  if (gains.size() != measurements.size())
    throw DimensionError("replay_frozen_gains: need one measurement per recorded gain");
  std::vector<Vector> estimates;
  estimates.reserve(gains.size());
  Vector xhat = x0;
  for (int k = 0; k < static_cast<int>(gains.size()); ++k) {
    Vector prior = eval_phi(model, p, k) * xhat;
    xhat = prior + gains[k] * (measurements[k] - eval_h(model, p, k + 1) * prior);
    if (!all_finite(xhat))
      throw NumericFailureError("replay produced non-finite estimate", k + 1);
    estimates.push_back(xhat);
  }
  return estimates;
}

std::vector<Matrix> fd_sensitivity(const ParametricDiscreteModel& model,
                                   const ParameterVector& p_hat, const Vector& x0,
                                   const std::vector<Matrix>& gains,
                                   const std::vector<Vector>& measurements, double delta) {
  if (!(delta > 0.0)) throw DimensionError("fd_sensitivity: delta must be positive");
  int n_epochs = static_cast<int>(gains.size());
  int n = static_cast<int>(x0.size());
  std::vector<Matrix> sensitivities(n_epochs, Matrix::Zero(n, model.param_dim));
  for (int i = 0; i < model.param_dim; ++i) {
    ParameterVector hi = p_hat, lo = p_hat;
    hi(i) += delta;
    lo(i) -= delta;
    std::vector<Vector> plus = replay_frozen_gains(model, hi, x0, gains, measurements);
    std::vector<Vector> minus = replay_frozen_gains(model, lo, x0, gains, measurements);
    for (int k = 0; k < n_epochs; ++k)
      sensitivities[k].col(i) = (plus[k] - minus[k]) / (2.0 * delta);
  }
  return sensitivities;
}

Matrix fd_cost_gradient(const std::function<double(const Matrix&)>& cost, const Matrix& k,
                        double eps) {
  if (!(eps > 0.0)) throw DimensionError("fd_cost_gradient: eps must be positive");
  Matrix grad(k.rows(), k.cols());
  for (Eigen::Index r = 0; r < k.rows(); ++r) {
    for (Eigen::Index c = 0; c < k.cols(); ++c) {
      Matrix hi = k, lo = k;
      hi(r, c) += eps;
      lo(r, c) -= eps;
      grad(r, c) = (cost(hi) - cost(lo)) / (2.0 * eps);
    }
  }
  return grad;
}

}  // namespace desense
