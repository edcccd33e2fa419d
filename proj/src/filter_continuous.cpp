#include "desense/filter_continuous.hpp"

#include "desense/errors.hpp"

namespace desense {

ContinuousFilterState make_initial_continuous_state(const Vector& x0, const Matrix& p0,
                                                    int param_dim, double t0) {
  int n = static_cast<int>(x0.size());
  if (param_dim < 1)
    throw DimensionError("make_initial_continuous_state: param_dim must be >= 1");
  if (p0.rows() != n || p0.cols() != n)
    throw DimensionError("make_initial_continuous_state: p0 must match the state dimension");
  if (!is_psd(p0)) throw DimensionError("make_initial_continuous_state: p0 must be symmetric PSD");
  ContinuousFilterState state;
  state.t = t0;
  state.xhat = x0;
  state.p_cov = symmetrize(p0);
  state.s = Matrix::Zero(n, param_dim);
  return state;
}

Matrix continuous_gain_adkf(const Matrix& p_cov, const Matrix& s, const Matrix& gamma,
                            const Matrix& w_a, const Matrix& h_bar, const Matrix& r) {
  Matrix numerator = p_cov * h_bar.transpose() + s * w_a * gamma.transpose();
  return solve_sym_right(numerator, r, "continuous desensitized gain");
}

Matrix continuous_gain_ksdkf(const Matrix& p_cov, const Matrix& s, const Matrix& gamma,
                             const std::vector<Matrix>& w_list, const Matrix& h_bar,
                             const Matrix& r) {
  if (static_cast<int>(w_list.size()) != s.cols())
    throw DimensionError("continuous_gain_ksdkf: one weight per parameter required");
  Matrix numerator = p_cov * h_bar.transpose();
  for (int i = 0; i < static_cast<int>(w_list.size()); ++i)
    numerator += w_list[i] * s.col(i) * gamma.col(i).transpose();
  return solve_sym_right(numerator, r, "continuous per-parameter desensitized gain");
}

ContinuousDerivatives derivatives(const ContinuousFilterState& state, const Vector& z,
                                  const ParametricContinuousModel& model,
                                  const ParameterVector& p_hat, const WeightingScheme& scheme) {
  Matrix phi_bar = eval_phi(model, p_hat, state.t);
  Matrix h_bar = eval_h(model, p_hat, state.t);
  Matrix gamma = h_bar * state.s + h_jacobian_action(model, p_hat, state.xhat, state.t);

  Matrix gain;
  if (const Adkf* a = std::get_if<Adkf>(&scheme)) {
    gain = continuous_gain_adkf(state.p_cov, state.s, gamma, a->w_a, h_bar, model.r);
  } else if (const Ksdkf* k = std::get_if<Ksdkf>(&scheme)) {
    gain = continuous_gain_ksdkf(state.p_cov, state.s, gamma, k->w_list, h_bar, model.r);
  } else {
    gain = solve_sym_right(state.p_cov * h_bar.transpose(), model.r, "continuous gain");
  }

  Matrix closed_loop = phi_bar - gain * h_bar;
  ContinuousDerivatives d;
  d.dxhat = phi_bar * state.xhat + gain * (z - h_bar * state.xhat);
  d.dp_cov = closed_loop * state.p_cov + state.p_cov * closed_loop.transpose() + model.q +
             gain * model.r * gain.transpose();
  d.ds = phi_bar * state.s + phi_jacobian_action(model, p_hat, state.xhat, state.t) - gain * gamma;
  return d;
}

ContinuousFilterState integrate_step(const ContinuousFilterState& state, const Vector& z,
                                     const ParametricContinuousModel& model,
                                     const ParameterVector& p_hat, const WeightingScheme& scheme,
                                     const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw DimensionError("integrate_step: dt must be positive");
  double dt = cfg.dt;

  auto advance = [&](const ContinuousDerivatives& d, double scale) {
    ContinuousFilterState next = state;
    next.t = state.t + scale;
    next.xhat = state.xhat + scale * d.dxhat;
    next.p_cov = state.p_cov + scale * d.dp_cov;
    next.s = state.s + scale * d.ds;
    return next;
  };

  ContinuousDerivatives k1 = derivatives(state, z, model, p_hat, scheme);
  ContinuousDerivatives k2 = derivatives(advance(k1, 0.5 * dt), z, model, p_hat, scheme);
  ContinuousDerivatives k3 = derivatives(advance(k2, 0.5 * dt), z, model, p_hat, scheme);
  ContinuousDerivatives k4 = derivatives(advance(k3, dt), z, model, p_hat, scheme);

  ContinuousFilterState next;
  next.t = state.t + dt;
  next.xhat =
      state.xhat + (dt / 6.0) * (k1.dxhat + 2.0 * k2.dxhat + 2.0 * k3.dxhat + k4.dxhat);
  next.p_cov = symmetrize(
      state.p_cov + (dt / 6.0) * (k1.dp_cov + 2.0 * k2.dp_cov + 2.0 * k3.dp_cov + k4.dp_cov));
  next.s = state.s + (dt / 6.0) * (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds);
  if (!all_finite(next.xhat) || !all_finite(next.p_cov) || !all_finite(next.s))
    throw NumericFailureError("integration produced non-finite values", next.t);
  return next;
}

}  // namespace desense
