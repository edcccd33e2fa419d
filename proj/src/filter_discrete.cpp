#include "desense/filter_discrete.hpp"

#include "desense/errors.hpp"

namespace desense {

namespace {

void check_weight_adkf(const Matrix& w_a, int param_dim, const std::string& name) {
  if (w_a.rows() != param_dim || w_a.cols() != param_dim)
    throw ConfigError(name + ": w_a must be " + std::to_string(param_dim) + "x" +
                      std::to_string(param_dim));
  if (!is_psd(w_a)) throw ConfigError(name + ": w_a must be symmetric positive semidefinite");
}

void check_weight_ksdkf(const std::vector<Matrix>& w_list, int state_dim, int param_dim,
                        const std::string& name) {
  if (static_cast<int>(w_list.size()) != param_dim)
    throw ConfigError(name + ": expected " + std::to_string(param_dim) +
                      " weight matrices, got " + std::to_string(w_list.size()));
  for (const Matrix& w : w_list) {
    if (w.rows() != state_dim || w.cols() != state_dim)
      throw ConfigError(name + ": each weight must be " + std::to_string(state_dim) + "x" +
                        std::to_string(state_dim));
    if (!is_psd(w)) throw ConfigError(name + ": weights must be symmetric positive semidefinite");
  }
}

Matrix innovation_covariance(const FilterState& prior, const Matrix& h_bar, const Matrix& r) {
  return symmetrize(h_bar * prior.p_cov * h_bar.transpose() + r);
}

void check_gamma(const Matrix& gamma, int meas_dim, int param_dim, const char* who) {
  if (gamma.rows() != meas_dim || gamma.cols() != param_dim)
    throw DimensionError(std::string(who) + ": gamma must be " + std::to_string(meas_dim) + "x" +
                         std::to_string(param_dim));
}

}  // namespace

FilterState make_initial_state(const Vector& x0, const Matrix& p0, int param_dim) {
  int n = static_cast<int>(x0.size());
  if (param_dim < 1) throw DimensionError("make_initial_state: param_dim must be >= 1");
  if (p0.rows() != n || p0.cols() != n)
    throw DimensionError("make_initial_state: p0 must match the state dimension");
  if (!is_psd(p0)) throw DimensionError("make_initial_state: p0 must be symmetric PSD");
  FilterState state;
  state.xhat = x0;
  state.p_cov = symmetrize(p0);
  // The initial estimate is chosen independently of the parameters, so its
  // sensitivity is exactly zero.
  state.s = Matrix::Zero(n, param_dim);
  state.epoch = 0;
  return state;
}

FilterState time_update(const FilterState& state, const ParametricDiscreteModel& model,
                        const ParameterVector& p_hat) {
  Matrix phi_bar = eval_phi(model, p_hat, state.epoch);
  Matrix psi = phi_jacobian_action(model, p_hat, state.xhat, state.epoch);
  FilterState out;
  out.xhat = phi_bar * state.xhat;
  out.p_cov = symmetrize(phi_bar * state.p_cov * phi_bar.transpose() + model.q);
  out.s = phi_bar * state.s + psi;
  out.epoch = state.epoch + 1;
  if (!all_finite(out.xhat) || !all_finite(out.p_cov) || !all_finite(out.s))
    throw NumericFailureError("time_update produced non-finite values", out.epoch);
  return out;
}

Matrix innovation_matrix(const FilterState& prior, const ParametricDiscreteModel& model,
                         const ParameterVector& p_hat) {
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  return h_bar * prior.s + h_jacobian_action(model, p_hat, prior.xhat, prior.epoch);
}

Matrix gain_kf(const FilterState& prior, const ParametricDiscreteModel& model,
               const ParameterVector& p_hat) {
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  Matrix xi = innovation_covariance(prior, h_bar, model.r);
  return solve_sym_right(prior.p_cov * h_bar.transpose(), xi, "conventional gain");
}

Matrix gain_adkf(const FilterState& prior, const Matrix& gamma, const Matrix& w_a,
                 const ParametricDiscreteModel& model, const ParameterVector& p_hat) {
  check_weight_adkf(w_a, model.param_dim, "gain_adkf");
  check_gamma(gamma, model.meas_dim, model.param_dim, "gain_adkf");
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  Matrix xi = innovation_covariance(prior, h_bar, model.r);
  Matrix numerator = prior.p_cov * h_bar.transpose() + prior.s * w_a * gamma.transpose();
  Matrix denominator = symmetrize(xi + gamma * w_a * gamma.transpose());
  return solve_sym_right(numerator, denominator, "desensitized gain");
}

Matrix gain_ksdkf(const FilterState& prior, const Matrix& gamma, const std::vector<Matrix>& w_list,
                  const ParametricDiscreteModel& model, const ParameterVector& p_hat) {
  check_weight_ksdkf(w_list, model.state_dim, model.param_dim, "gain_ksdkf");
  check_gamma(gamma, model.meas_dim, model.param_dim, "gain_ksdkf");
  int n = model.state_dim;
  int m = model.meas_dim;
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  Matrix xi = innovation_covariance(prior, h_bar, model.r);

  // The gain satisfies  K Ξ + Σᵢ Wᵢ K γᵢγᵢᵀ = P⁻Hᵀ + Σᵢ Wᵢ σᵢ γᵢᵀ.
  // vec(AXB) = (Bᵀ ⊗ A) vec(X) turns it into one symmetric (nm)×(nm) solve.
  Matrix coeff = kron(xi, Matrix::Identity(n, n));
  Matrix rhs = prior.p_cov * h_bar.transpose();
  for (int i = 0; i < model.param_dim; ++i) {
    Matrix gi = gamma.col(i) * gamma.col(i).transpose();
    coeff += kron(gi, w_list[i]);
    rhs += w_list[i] * prior.s.col(i) * gamma.col(i).transpose();
  }
  Matrix vec_rhs = Eigen::Map<const Vector>(rhs.data(), n * m);
  Matrix vec_gain = solve_sym(symmetrize(coeff), vec_rhs, "per-parameter desensitized gain");
  return Eigen::Map<const Matrix>(vec_gain.data(), n, m);
}

std::pair<double, double> cost_adkf(const FilterState& posterior, const Matrix& w_a) {
  double penalty = (posterior.s * w_a * posterior.s.transpose()).trace();
  return {posterior.p_cov.trace() + penalty, penalty};
}

std::pair<double, double> cost_ksdkf(const FilterState& posterior,
                                     const std::vector<Matrix>& w_list) {
  double penalty = 0.0;
  for (int i = 0; i < static_cast<int>(w_list.size()); ++i)
    penalty += posterior.s.col(i).dot(w_list[i] * posterior.s.col(i));
  return {posterior.p_cov.trace() + penalty, penalty};
}

std::pair<FilterState, StepRecord> measurement_update(const FilterState& prior, const Matrix& gain,
                                                      const Vector& z,
                                                      const ParametricDiscreteModel& model,
                                                      const ParameterVector& p_hat,
                                                      const WeightingScheme& scheme) {
  if (z.size() != model.meas_dim)
    throw DimensionError("measurement_update: measurement has wrong length");
  if (gain.rows() != model.state_dim || gain.cols() != model.meas_dim)
    throw DimensionError("measurement_update: gain has wrong shape");
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  Matrix gamma = innovation_matrix(prior, model, p_hat);

  FilterState post;
  post.epoch = prior.epoch;
  Vector innovation = z - h_bar * prior.xhat;
  post.xhat = prior.xhat + gain * innovation;
  // Joseph form stays valid for gains that are not minimum-variance.
  Matrix ikh = Matrix::Identity(model.state_dim, model.state_dim) - gain * h_bar;
  post.p_cov =
      symmetrize(ikh * prior.p_cov * ikh.transpose() + gain * model.r * gain.transpose());
  post.s = prior.s - gain * gamma;
  if (!all_finite(post.xhat) || !all_finite(post.p_cov) || !all_finite(post.s))
    throw NumericFailureError("measurement_update produced non-finite values", post.epoch);

  StepRecord record;
  record.gain = gain;
  record.innovation = innovation;
  record.gamma = gamma;
  record.trace_p = post.p_cov.trace();
  if (const Adkf* a = std::get_if<Adkf>(&scheme)) {
    std::tie(record.cost_total, record.cost_penalty) = cost_adkf(post, a->w_a);
  } else if (const Ksdkf* k = std::get_if<Ksdkf>(&scheme)) {
    std::tie(record.cost_total, record.cost_penalty) = cost_ksdkf(post, k->w_list);
  } else {
    record.cost_total = record.trace_p;
    record.cost_penalty = 0.0;
  }
  return {std::move(post), std::move(record)};
}

std::pair<FilterState, StepRecord> step(const FilterState& state, const Vector& z,
                                        const ParametricDiscreteModel& model,
                                        const ParameterVector& p_hat,
                                        const WeightingScheme& scheme) {
  FilterState prior = time_update(state, model, p_hat);
  Matrix gamma = innovation_matrix(prior, model, p_hat);
  Matrix gain;
  if (const Adkf* a = std::get_if<Adkf>(&scheme)) {
    gain = gain_adkf(prior, gamma, a->w_a, model, p_hat);
  } else if (const Ksdkf* k = std::get_if<Ksdkf>(&scheme)) {
    gain = gain_ksdkf(prior, gamma, k->w_list, model, p_hat);
  } else {
    gain = gain_kf(prior, model, p_hat);
  }
  return measurement_update(prior, gain, z, model, p_hat, scheme);
}

void validate_scheme(const WeightingScheme& scheme, int state_dim, int param_dim,
                     const std::string& name) {
  if (const Adkf* a = std::get_if<Adkf>(&scheme)) {
    check_weight_adkf(a->w_a, param_dim, name);
  } else if (const Ksdkf* k = std::get_if<Ksdkf>(&scheme)) {
    check_weight_ksdkf(k->w_list, state_dim, param_dim, name);
  }
}

}  // namespace desense
