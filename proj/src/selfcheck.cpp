#include "desense/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "desense/filter_discrete.hpp"
#include "desense/model.hpp"
#include "desense/montecarlo.hpp"
#include "desense/sensitivity_oracle.hpp"
#include "desense/synthetic.hpp"

namespace desense {

namespace {

struct Dims {
  int n, m, l;
};

Dims dims_for(int i) {
  static const Dims table[] = {{2, 2, 2}, {3, 2, 2}, {4, 3, 3}, {2, 1, 1},
                               {3, 3, 1}, {4, 2, 3}, {1, 1, 1}, {5, 3, 2}};
  return table[i % 8];
}

ParameterVector small_parameter(CaseRng& rng, int l) {
  ParameterVector p(l);
  for (int i = 0; i < l; ++i) p(i) = rng.uniform(-0.2, 0.2);
  return p;
}

/// Post-update cost as a function of the gain alone; the measurement value
/// does not enter the cost, so z = 0 is as good as any.
double update_cost(const FilterState& prior, const Matrix& gain,
                   const ParametricDiscreteModel& model, const ParameterVector& p_hat,
                   const WeightingScheme& scheme) {
  Vector z = Vector::Zero(model.meas_dim);
  return measurement_update(prior, gain, z, model, p_hat, scheme).second.cost_total;
}

double gain_scale(const Matrix& k) { return std::max(1.0, k.cwiseAbs().maxCoeff()); }

CheckResult check_reduction() {
  CheckResult res{"reduction to conventional gain at zero weights", false, 0.0, 1e-12,
                  "1000 random priors"};
  CaseRng rng(90001, 0);
  for (int i = 0; i < 1000; ++i) {
    Dims d = dims_for(i);
    ParametricDiscreteModel model = make_random_discrete_model(rng, d.n, d.m, d.l);
    FilterState prior = make_random_prior(rng, d.n, d.l);
    ParameterVector p_hat = small_parameter(rng, d.l);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    Matrix k_kf = gain_kf(prior, model, p_hat);
    Matrix k_a = gain_adkf(prior, gamma, Matrix::Zero(d.l, d.l), model, p_hat);
    Matrix k_s = gain_ksdkf(prior, gamma, std::vector<Matrix>(d.l, Matrix::Zero(d.n, d.n)),
                            model, p_hat);
    double scale = gain_scale(k_kf);
    res.margin = std::max(res.margin, (k_a - k_kf).cwiseAbs().maxCoeff() / scale);
    res.margin = std::max(res.margin, (k_s - k_kf).cwiseAbs().maxCoeff() / scale);
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

CheckResult check_stationarity(bool per_parameter, double gain_perturbation) {
  CheckResult res{per_parameter ? "gain stationarity (per-parameter penalty)"
                                : "gain stationarity (stacked penalty)",
                  false, 0.0, 1e-5, "FD gradient over 100 random priors, random PSD weights"};
  CaseRng rng(per_parameter ? 90003 : 90002, 0);
  for (int i = 0; i < 100; ++i) {
    Dims d = dims_for(i);
    ParametricDiscreteModel model = make_random_discrete_model(rng, d.n, d.m, d.l);
    FilterState prior = make_random_prior(rng, d.n, d.l);
    ParameterVector p_hat = small_parameter(rng, d.l);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    WeightingScheme scheme;
    Matrix gain;
    if (per_parameter) {
      std::vector<Matrix> w_list;
      for (int j = 0; j < d.l; ++j) w_list.push_back(random_spd(rng, d.n, 0.7, 1e-3));
      gain = gain_ksdkf(prior, gamma, w_list, model, p_hat);
      scheme = Ksdkf{std::move(w_list)};
    } else {
      Matrix w_a = random_spd(rng, d.l, 0.7, 1e-3);
      gain = gain_adkf(prior, gamma, w_a, model, p_hat);
      scheme = Adkf{std::move(w_a)};
    }
    gain.array() += gain_perturbation;
    auto cost = [&](const Matrix& k) { return update_cost(prior, k, model, p_hat, scheme); };
    double j_value = cost(gain);
    Matrix grad = fd_cost_gradient(cost, gain, 1e-6);
    res.margin = std::max(res.margin, grad.cwiseAbs().maxCoeff() / (1.0 + std::abs(j_value)));
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

CheckResult check_implicit_residual(double gain_perturbation) {
  CheckResult res{"implicit gain equation residual", false, 0.0, 1e-9,
                  "relative Frobenius residual over 100 random priors"};
  CaseRng rng(90004, 0);
  for (int i = 0; i < 100; ++i) {
    Dims d = dims_for(i);
    ParametricDiscreteModel model = make_random_discrete_model(rng, d.n, d.m, d.l);
    FilterState prior = make_random_prior(rng, d.n, d.l);
    ParameterVector p_hat = small_parameter(rng, d.l);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    std::vector<Matrix> w_list;
    for (int j = 0; j < d.l; ++j) w_list.push_back(random_spd(rng, d.n, 0.7, 1e-3));
    Matrix gain = gain_ksdkf(prior, gamma, w_list, model, p_hat);
    gain.array() += gain_perturbation;

    Matrix h_bar = eval_h(model, p_hat, prior.epoch);
    Matrix xi = symmetrize(h_bar * prior.p_cov * h_bar.transpose() + model.r);
    Matrix lhs = gain * xi;
    Matrix rhs = prior.p_cov * h_bar.transpose();
    for (int j = 0; j < d.l; ++j) {
      lhs += w_list[j] * gain * gamma.col(j) * gamma.col(j).transpose();
      rhs += w_list[j] * prior.s.col(j) * gamma.col(j).transpose();
    }
    res.margin = std::max(res.margin, (lhs - rhs).norm() / rhs.norm());
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

CheckResult check_single_parameter_equivalence() {
  CheckResult res{"single-parameter gain equivalence", false, 0.0, 1e-9,
                  "stacked vs per-parameter gain over 100 random one-parameter models"};
  CaseRng rng(90005, 0);
  for (int i = 0; i < 100; ++i) {
    int n = 1 + i % 5;
    int m = 1 + i % 3;
    ParametricDiscreteModel model = make_random_discrete_model(rng, n, m, 1);
    FilterState prior = make_random_prior(rng, n, 1);
    ParameterVector p_hat = small_parameter(rng, 1);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    double w = rng.uniform(0.01, 2.0);
    Matrix w_a(1, 1);
    w_a << w;
    Matrix k_stacked = gain_adkf(prior, gamma, w_a, model, p_hat);
    Matrix k_per = gain_ksdkf(prior, gamma, {w * Matrix::Identity(n, n)}, model, p_hat);
    res.margin =
        std::max(res.margin, (k_stacked - k_per).cwiseAbs().maxCoeff() / gain_scale(k_stacked));
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

CheckResult check_one_step_optimality() {
  CheckResult res{"one-step cost optimality", false, std::numeric_limits<double>::infinity(), 0.0,
                  "desensitized-gain cost minus conventional-gain cost, 50-epoch benchmark run"};
  BenchmarkSetup setup = make_benchmark();
  CaseRng rng(90006, 0);
  ParameterVector p_true = draw_parameters(rng, setup.param_ranges);
  TruthTrajectory truth = simulate_truth(setup.model, p_true, setup.x0, rng, 50);
  WeightingScheme scheme = Adkf{setup.w_a_reference};
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  for (int k = 0; k < 50; ++k) {
    FilterState prior = time_update(state, setup.model, setup.p_hat);
    Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
    Matrix k_desens = gain_adkf(prior, gamma, setup.w_a_reference, setup.model, setup.p_hat);
    Matrix k_conv = gain_kf(prior, setup.model, setup.p_hat);
    double j_desens = update_cost(prior, k_desens, setup.model, setup.p_hat, scheme);
    double j_conv = update_cost(prior, k_conv, setup.model, setup.p_hat, scheme);
    res.margin = std::min(res.margin, j_conv - j_desens);
    state = measurement_update(prior, k_desens, truth.measurements[k], setup.model, setup.p_hat,
                               scheme)
                .first;
  }
  // The prior sensitivity is nonzero at every epoch of this run, so the
  // inequality must be strict.
  res.pass = res.margin > res.threshold;
  return res;
}

CheckResult check_trace_gradient_identities() {
  CheckResult res{"trace gradient identities", false, 0.0, 1e-6,
                  "FD gradient of Tr(KP) vs Pᵀ and of Tr(KPKᵀ) vs 2KP, 10 random pairs each"};
  CaseRng rng(90008, 0);
  for (int i = 0; i < 10; ++i) {
    Dims d = dims_for(i);
    Matrix k = random_matrix(rng, d.n, d.m, 2.0);
    Matrix p_lin = random_matrix(rng, d.m, d.n, 2.0);
    Matrix grad_lin = fd_cost_gradient([&](const Matrix& g) { return (g * p_lin).trace(); }, k);
    double scale_lin = 1.0 + p_lin.cwiseAbs().maxCoeff();
    res.margin =
        std::max(res.margin, (grad_lin - p_lin.transpose()).cwiseAbs().maxCoeff() / scale_lin);

    Matrix p_quad = random_spd(rng, d.m, 1.0, 1e-2);
    Matrix grad_quad = fd_cost_gradient(
        [&](const Matrix& g) { return (g * p_quad * g.transpose()).trace(); }, k);
    Matrix expected = 2.0 * k * p_quad;
    double scale_quad = 1.0 + expected.cwiseAbs().maxCoeff();
    res.margin = std::max(res.margin, (grad_quad - expected).cwiseAbs().maxCoeff() / scale_quad);
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

struct OracleRun {
  std::vector<Matrix> gains;
  std::vector<Vector> measurements;
  std::vector<Matrix> analytic;  // posterior sensitivity per epoch
};

OracleRun record_run(const ParametricDiscreteModel& model, const ParameterVector& p_hat,
                     const Vector& x0, const Matrix& p0, const WeightingScheme& scheme,
                     const TruthTrajectory& truth) {
  OracleRun run;
  FilterState state = make_initial_state(x0, p0, model.param_dim);
  for (const Vector& z : truth.measurements) {
    auto [next, record] = step(state, z, model, p_hat, scheme);
    state = std::move(next);
    run.gains.push_back(record.gain);
    run.measurements.push_back(z);
    run.analytic.push_back(state.s);
  }
  return run;
}

double worst_oracle_error(const ParametricDiscreteModel& model, const ParameterVector& p_hat,
                          const Vector& x0, const OracleRun& run) {
  std::vector<Matrix> fd =
      fd_sensitivity(model, p_hat, x0, run.gains, run.measurements);
  double worst = 0.0;
  for (int k = 0; k < static_cast<int>(fd.size()); ++k) {
    double err = (fd[k] - run.analytic[k]).cwiseAbs().maxCoeff() /
                 (1.0 + run.analytic[k].cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
  }
  return worst;
}

CheckResult check_fd_oracle() {
  CheckResult res{"sensitivity vs frozen-gain finite differences", false, 0.0, 1e-4,
                  "50-epoch benchmark run plus 20 random models"};
  BenchmarkSetup setup = make_benchmark();
  CaseRng rng(90007, 0);
  ParameterVector p_true = draw_parameters(rng, setup.param_ranges);
  TruthTrajectory truth = simulate_truth(setup.model, p_true, setup.x0, rng, 50);
  OracleRun run = record_run(setup.model, setup.p_hat, setup.x0, setup.p0_cov,
                             Adkf{setup.w_a_reference}, truth);
  res.margin = worst_oracle_error(setup.model, setup.p_hat, setup.x0, run);

  for (int i = 0; i < 20; ++i) {
    Dims d = dims_for(i);
    ParametricDiscreteModel model = make_random_discrete_model(rng, d.n, d.m, d.l);
    ParameterVector p_hat = small_parameter(rng, d.l);
    Vector x0 = random_matrix(rng, d.n, 1, 5.0);
    Matrix p0 = random_spd(rng, d.n, 1.0, 1e-2);
    TruthTrajectory t = simulate_truth(model, p_hat, x0, rng, 30);
    WeightingScheme scheme;
    if (i % 3 == 0) {
      scheme = Conventional{};
    } else if (i % 3 == 1) {
      scheme = Adkf{random_spd(rng, d.l, 0.5, 1e-3)};
    } else {
      std::vector<Matrix> w_list;
      for (int j = 0; j < d.l; ++j) w_list.push_back(random_spd(rng, d.n, 0.5, 1e-3));
      scheme = Ksdkf{std::move(w_list)};
    }
    OracleRun r = record_run(model, p_hat, x0, p0, scheme, t);
    res.margin = std::max(res.margin, worst_oracle_error(model, p_hat, x0, r));
  }
  res.pass = res.margin <= res.threshold;
  return res;
}

}  // namespace

std::vector<CheckResult> run_self_checks(double gain_perturbation) {
  std::vector<CheckResult> results;
  results.push_back(check_reduction());
  results.push_back(check_stationarity(false, gain_perturbation));
  results.push_back(check_stationarity(true, gain_perturbation));
  results.push_back(check_implicit_residual(gain_perturbation));
  results.push_back(check_single_parameter_equivalence());
  results.push_back(check_trace_gradient_identities());
  results.push_back(check_one_step_optimality());
  results.push_back(check_fd_oracle());
  return results;
}

}  // namespace desense
