#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "desense/errors.hpp"
#include "desense/filter_discrete.hpp"
#include "desense/model.hpp"
#include "desense/montecarlo.hpp"
#include "desense/numeric.hpp"
#include "desense/rng.hpp"
#include "desense/sensitivity_oracle.hpp"
#include "desense/synthetic.hpp"

using namespace desense;

namespace {

// Hand-built models sidestep the factory validation so degenerate noise
// covariances (Q = 0, R = 0) can be exercised directly.
ParametricDiscreteModel raw_model(const Matrix& phi, const Matrix& h, const Matrix& q,
                                  const Matrix& r, int param_dim) {
  ParametricDiscreteModel model;
  model.state_dim = static_cast<int>(phi.rows());
  model.meas_dim = static_cast<int>(h.rows());
  model.param_dim = param_dim;
  model.phi = [phi](const ParameterVector&, int) { return phi; };
  model.h = [h](const ParameterVector&, int) { return h; };
  int n = model.state_dim;
  int m = model.meas_dim;
  model.dphi = [n](const ParameterVector&, int, int) { return Matrix::Zero(n, n).eval(); };
  model.dh = [m, n](const ParameterVector&, int, int) { return Matrix::Zero(m, n).eval(); };
  model.q = q;
  model.r = r;
  return model;
}

double update_cost(const FilterState& prior, const Matrix& gain,
                   const ParametricDiscreteModel& model, const ParameterVector& p_hat,
                   const WeightingScheme& scheme) {
  Vector z = Vector::Zero(model.meas_dim);
  return measurement_update(prior, gain, z, model, p_hat, scheme).second.cost_total;
}

// The update costs are exactly quadratic in the gain, so one Newton step from
// zero, with gradient and Hessian probed entirely by finite differences of
// the cost, lands on the minimizer. Independent of every analytic gain
// formula under test.
Matrix brute_force_gain(const FilterState& prior, const ParametricDiscreteModel& model,
                        const ParameterVector& p_hat, const WeightingScheme& scheme) {
  int n = model.state_dim;
  int m = model.meas_dim;
  auto cost = [&](const Matrix& k) { return update_cost(prior, k, model, p_hat, scheme); };
  const double eps = 1e-4;
  Matrix g0 = fd_cost_gradient(cost, Matrix::Zero(n, m), eps);
  Matrix hess(n * m, n * m);
  for (int j = 0; j < n * m; ++j) {
    Matrix basis = Matrix::Zero(n, m);
    basis(j % n, j / n) = 1.0;
    Matrix gj = fd_cost_gradient(cost, basis, eps);
    Matrix diff = gj - g0;
    hess.col(j) = Eigen::Map<const Vector>(diff.data(), diff.size());
  }
  Vector rhs = -Eigen::Map<const Vector>(g0.data(), g0.size());
  Vector solution = symmetrize(hess).ldlt().solve(rhs);
  return Eigen::Map<const Matrix>(solution.data(), n, m);
}

FilterState benchmark_prior() {
  BenchmarkSetup setup = make_benchmark();
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  return time_update(state, setup.model, setup.p_hat);
}

}  // namespace

TEST_CASE("make_initial_state zeroes the sensitivities") {
  Vector x0(2);
  x0 << 10.0, -10.0;
  FilterState state = make_initial_state(x0, 0.1 * Matrix::Identity(2, 2), 3);
  CHECK(state.epoch == 0);
  CHECK(state.s.rows() == 2);
  CHECK(state.s.cols() == 3);
  CHECK(state.s.isZero());
  CHECK_THROWS_AS(make_initial_state(x0, -Matrix::Identity(2, 2), 1), FilterError);
}

TEST_CASE("time_update on the benchmark matches hand arithmetic") {
  BenchmarkSetup setup = make_benchmark();
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  FilterState prior = time_update(state, setup.model, setup.p_hat);

  CHECK(prior.epoch == 1);
  CHECK(prior.xhat(0) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(prior.xhat(1) == doctest::Approx(-14.0).epsilon(1e-14));

  Matrix expected_p(2, 2);
  expected_p << 0.201, -0.041, -0.041, 0.206;
  CHECK((prior.p_cov - expected_p).cwiseAbs().maxCoeff() < 1e-14);

  Matrix expected_s(2, 2);
  expected_s << -10.0, 0.0, 0.0, 10.0;
  CHECK((prior.s - expected_s).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("time_update covariance agrees with a sampled error-propagation oracle") {
  // P⁻ = E[(Φe + w)(Φe + w)ᵀ] estimated from 200k draws of e ~ N(0, P) and
  // w ~ N(0, Q); Monte-Carlo agreement at the 2% level.
  BenchmarkSetup setup = make_benchmark();
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  FilterState prior = time_update(state, setup.model, setup.p_hat);

  Matrix phi = eval_phi(setup.model, setup.p_hat);
  CaseRng rng(301, 0);
  Matrix accum = Matrix::Zero(2, 2);
  const int draws = 200000;
  double p_scale = std::sqrt(0.1);
  for (int i = 0; i < draws; ++i) {
    Vector e = p_scale * rng.normal_vector(2);
    Vector w = p_scale * rng.normal_vector(2);
    Vector propagated = phi * e + w;
    accum += propagated * propagated.transpose();
  }
  Matrix sampled = accum / draws;
  CHECK((sampled - prior.p_cov).cwiseAbs().maxCoeff() < 0.02 * prior.p_cov.trace());
}

TEST_CASE("time_update with identity dynamics and zero noise is a no-op") {
  ParametricDiscreteModel model = raw_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            Matrix::Zero(2, 2), Matrix::Identity(2, 2), 1);
  Vector x0(2);
  x0 << 1.0, -2.0;
  FilterState state = make_initial_state(x0, Matrix::Identity(2, 2), 1);
  state.s << 0.5, -0.25;
  FilterState next = time_update(state, model, Vector::Zero(1));
  CHECK(next.epoch == 1);
  CHECK(next.xhat.isApprox(state.xhat));
  CHECK(next.p_cov.isApprox(state.p_cov));
  CHECK(next.s.isApprox(state.s));
}

TEST_CASE("sensitivity stays zero under a parameter-independent transition") {
  ParametricDiscreteModel model = raw_model(0.9 * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            0.01 * Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            2);
  Vector x0(2);
  x0 << 3.0, 1.0;
  FilterState state = make_initial_state(x0, Matrix::Identity(2, 2), 2);
  for (int k = 0; k < 5; ++k) state = time_update(state, model, Vector::Zero(2));
  CHECK(state.s.isZero());
}

TEST_CASE("innovation_matrix stacks per-parameter measurement sensitivities") {
  FilterState prior = benchmark_prior();
  BenchmarkSetup setup = make_benchmark();
  Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
  // H = I and ∂H/∂p = 0, so γ is exactly S⁻.
  CHECK((gamma - prior.s).cwiseAbs().maxCoeff() < 1e-14);

  FilterState zero_s = prior;
  zero_s.s.setZero();
  CHECK(innovation_matrix(zero_s, setup.model, setup.p_hat).isZero());
}

TEST_CASE("innovation_matrix columns match the per-parameter formula") {
  CaseRng rng(302, 0);
  ParametricDiscreteModel model = make_random_discrete_model(rng, 3, 2, 2);
  FilterState prior = make_random_prior(rng, 3, 2);
  ParameterVector p_hat(2);
  p_hat << 0.1, -0.05;
  Matrix gamma = innovation_matrix(prior, model, p_hat);
  Matrix h_bar = eval_h(model, p_hat, prior.epoch);
  Matrix h_action = h_jacobian_action(model, p_hat, prior.xhat, prior.epoch);
  for (int i = 0; i < 2; ++i) {
    Vector expected = h_bar * prior.s.col(i) + h_action.col(i);
    CHECK((gamma.col(i) - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("gain_kf scalar case and unobservable case") {
  ParametricDiscreteModel model = raw_model(Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                                            Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1);
  FilterState prior;
  prior.xhat = Vector::Zero(1);
  prior.p_cov = Matrix::Identity(1, 1);
  prior.s = Matrix::Zero(1, 1);
  prior.epoch = 1;
  CHECK(gain_kf(prior, model, Vector::Zero(1))(0, 0) == doctest::Approx(0.5));

  ParametricDiscreteModel blind = raw_model(Matrix::Identity(1, 1), Matrix::Zero(1, 1),
                                            Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1);
  CHECK(gain_kf(prior, blind, Vector::Zero(1))(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gain_kf matches the brute-force trace minimizer on the benchmark prior") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix k = gain_kf(prior, setup.model, setup.p_hat);
  Matrix k_oracle = brute_force_gain(prior, setup.model, setup.p_hat, Conventional{});
  CHECK((k - k_oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gain_adkf scalar hand example") {
  ParametricDiscreteModel model = raw_model(Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                                            Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1);
  FilterState prior;
  prior.xhat = Vector::Zero(1);
  prior.p_cov = Matrix::Identity(1, 1);
  prior.s = Matrix::Identity(1, 1);
  prior.epoch = 1;
  Matrix gamma = innovation_matrix(prior, model, Vector::Zero(1));
  CHECK(gamma(0, 0) == doctest::Approx(1.0));
  Matrix w_a = Matrix::Identity(1, 1);
  Matrix k = gain_adkf(prior, gamma, w_a, model, Vector::Zero(1));
  CHECK(k(0, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("gain_adkf with zero weight reduces to gain_kf") {
  CaseRng rng(303, 0);
  for (int i = 0; i < 50; ++i) {
    int n = 1 + i % 4;
    int m = 1 + i % 3;
    int l = 1 + i % 3;
    ParametricDiscreteModel model = make_random_discrete_model(rng, n, m, l);
    FilterState prior = make_random_prior(rng, n, l);
    ParameterVector p_hat = ParameterVector::Zero(l);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    Matrix k_kf = gain_kf(prior, model, p_hat);
    Matrix k_a = gain_adkf(prior, gamma, Matrix::Zero(l, l), model, p_hat);
    double scale = std::max(1.0, k_kf.cwiseAbs().maxCoeff());
    CHECK((k_a - k_kf).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("gain_adkf matches the brute-force minimizer of the stacked-penalty cost") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
  Matrix k = gain_adkf(prior, gamma, setup.w_a_reference, setup.model, setup.p_hat);
  Matrix k_oracle =
      brute_force_gain(prior, setup.model, setup.p_hat, Adkf{setup.w_a_reference});
  CHECK((k - k_oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gain_ksdkf scalar hand example") {
  ParametricDiscreteModel model = raw_model(Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                                            Matrix::Identity(1, 1), Matrix::Identity(1, 1), 1);
  FilterState prior;
  prior.xhat = Vector::Zero(1);
  prior.p_cov = Matrix::Identity(1, 1);
  prior.s = Matrix::Identity(1, 1);
  prior.epoch = 1;
  Matrix gamma = innovation_matrix(prior, model, Vector::Zero(1));
  Matrix k = gain_ksdkf(prior, gamma, {Matrix::Identity(1, 1)}, model, Vector::Zero(1));
  // K·(HPH+R) + W K γγᵀ = PH + W σ γ  →  2K + K = 2  →  K = 2/3.
  CHECK(k(0, 0) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("gain_ksdkf with zero weights reduces to gain_kf") {
  CaseRng rng(304, 0);
  for (int i = 0; i < 50; ++i) {
    int n = 1 + i % 4;
    int m = 1 + i % 3;
    int l = 1 + i % 3;
    ParametricDiscreteModel model = make_random_discrete_model(rng, n, m, l);
    FilterState prior = make_random_prior(rng, n, l);
    ParameterVector p_hat = ParameterVector::Zero(l);
    Matrix gamma = innovation_matrix(prior, model, p_hat);
    Matrix k_kf = gain_kf(prior, model, p_hat);
    std::vector<Matrix> zeros(l, Matrix::Zero(n, n));
    Matrix k_s = gain_ksdkf(prior, gamma, zeros, model, p_hat);
    double scale = std::max(1.0, k_kf.cwiseAbs().maxCoeff());
    CHECK((k_s - k_kf).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("gain_ksdkf satisfies its defining equation on benchmark priors") {
  BenchmarkSetup setup = make_benchmark();
  std::vector<Matrix> w_list(2, 0.1 * Matrix::Identity(2, 2));
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  WeightingScheme scheme = Ksdkf{w_list};
  CaseRng rng(305, 0);
  for (int k = 0; k < 10; ++k) {
    FilterState prior = time_update(state, setup.model, setup.p_hat);
    Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
    Matrix gain = gain_ksdkf(prior, gamma, w_list, setup.model, setup.p_hat);

    Matrix h_bar = eval_h(setup.model, setup.p_hat, prior.epoch);
    Matrix xi = symmetrize(h_bar * prior.p_cov * h_bar.transpose() + setup.model.r);
    Matrix lhs = gain * xi;
    Matrix rhs = prior.p_cov * h_bar.transpose();
    for (int i = 0; i < 2; ++i) {
      lhs += w_list[i] * gain * gamma.col(i) * gamma.col(i).transpose();
      rhs += w_list[i] * prior.s.col(i) * gamma.col(i).transpose();
    }
    CHECK((lhs - rhs).norm() <= 1e-9 * rhs.norm());

    Vector z = rng.normal_vector(2);
    state = measurement_update(prior, gain, z, setup.model, setup.p_hat, scheme).first;
  }
}

TEST_CASE("gain_ksdkf matches the brute-force minimizer of the per-parameter cost") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
  std::vector<Matrix> w_list(2, 0.1 * Matrix::Identity(2, 2));
  Matrix k = gain_ksdkf(prior, gamma, w_list, setup.model, setup.p_hat);
  Matrix k_oracle = brute_force_gain(prior, setup.model, setup.p_hat, Ksdkf{w_list});
  CHECK((k - k_oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("measurement_update with zero gain returns the prior") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Vector z(2);
  z << 5.0, -3.0;
  auto [post, record] =
      measurement_update(prior, Matrix::Zero(2, 2), z, setup.model, setup.p_hat, Conventional{});
  CHECK(post.xhat.isApprox(prior.xhat));
  CHECK((post.p_cov - prior.p_cov).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(post.s.isApprox(prior.s));
  CHECK(record.trace_p == doctest::Approx(prior.p_cov.trace()));
}

TEST_CASE("measurement_update with identity gain and perfect measurements") {
  ParametricDiscreteModel model = raw_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                            Matrix::Identity(2, 2), Matrix::Zero(2, 2), 1);
  FilterState prior;
  prior.xhat = Vector::Ones(2);
  prior.p_cov = 2.0 * Matrix::Identity(2, 2);
  prior.s = Matrix::Zero(2, 1);
  prior.epoch = 1;
  Vector z(2);
  z << 7.0, -4.0;
  auto [post, record] =
      measurement_update(prior, Matrix::Identity(2, 2), z, model, Vector::Zero(1), Conventional{});
  CHECK(post.xhat.isApprox(z));
  CHECK(post.p_cov.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(record.innovation.isApprox(z - prior.xhat));
}

TEST_CASE("Joseph form agrees with the short form at the optimal gain") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix k = gain_kf(prior, setup.model, setup.p_hat);
  Vector z(2);
  z << 8.7, -13.2;
  auto [post, record] = measurement_update(prior, k, z, setup.model, setup.p_hat, Conventional{});
  Matrix h_bar = eval_h(setup.model, setup.p_hat, prior.epoch);
  Matrix short_form = (Matrix::Identity(2, 2) - k * h_bar) * prior.p_cov;
  CHECK((post.p_cov - symmetrize(short_form)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("measurement_update raises a numeric failure on non-finite input") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix k = gain_kf(prior, setup.model, setup.p_hat);
  Vector z(2);
  z << std::nan(""), 0.0;
  CHECK_THROWS_AS(measurement_update(prior, k, z, setup.model, setup.p_hat, Conventional{}),
                  NumericFailureError);
}

TEST_CASE("sensitivity update subtracts the gain-weighted innovation matrix") {
  CaseRng rng(306, 0);
  ParametricDiscreteModel model = make_random_discrete_model(rng, 3, 2, 2);
  FilterState prior = make_random_prior(rng, 3, 2);
  ParameterVector p_hat = ParameterVector::Zero(2);
  Matrix gamma = innovation_matrix(prior, model, p_hat);
  Matrix k = gain_kf(prior, model, p_hat);
  Vector z = rng.normal_vector(2);
  auto [post, record] = measurement_update(prior, k, z, model, p_hat, Conventional{});
  // Stacked update vs the per-parameter recursion, column by column.
  for (int i = 0; i < 2; ++i) {
    Vector expected = prior.s.col(i) - k * gamma.col(i);
    CHECK((post.s.col(i) - expected).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("cost_adkf trivial values") {
  FilterState post;
  post.xhat = Vector::Zero(2);
  post.p_cov = Matrix::Identity(2, 2);
  post.s = Matrix::Zero(2, 2);
  auto [total_zero_s, penalty_zero_s] = cost_adkf(post, Matrix::Identity(2, 2));
  CHECK(total_zero_s == doctest::Approx(2.0));
  CHECK(penalty_zero_s == doctest::Approx(0.0));

  post.p_cov = Matrix::Zero(2, 2);
  post.s = Matrix::Identity(2, 2);
  auto [total_id, penalty_id] = cost_adkf(post, Matrix::Identity(2, 2));
  CHECK(total_id == doctest::Approx(2.0));
  CHECK(penalty_id == doctest::Approx(2.0));
}

TEST_CASE("cost_adkf diagonal weight expands to a per-column sum") {
  CaseRng rng(307, 0);
  FilterState post;
  post.xhat = Vector::Zero(2);
  post.p_cov = random_spd(rng, 2);
  post.s = random_matrix(rng, 2, 2, 3.0);
  Matrix w_a = Matrix::Zero(2, 2);
  w_a.diagonal() << 0.003, 0.075;
  auto [total, penalty] = cost_adkf(post, w_a);
  double by_hand = 0.003 * post.s.col(0).squaredNorm() + 0.075 * post.s.col(1).squaredNorm();
  CHECK(penalty == doctest::Approx(by_hand).epsilon(1e-12));
  CHECK(total == doctest::Approx(post.p_cov.trace() + by_hand).epsilon(1e-12));
}

TEST_CASE("cost_ksdkf trivial values and isotropic equality with cost_adkf") {
  CaseRng rng(308, 0);
  FilterState post;
  post.xhat = Vector::Zero(3);
  post.p_cov = random_spd(rng, 3);
  post.s = Matrix::Zero(3, 2);
  CHECK(cost_ksdkf(post, {Matrix::Zero(3, 3), Matrix::Zero(3, 3)}).second == 0.0);

  post.s = random_matrix(rng, 3, 1, 2.0);
  auto [total_l1, penalty_l1] = cost_ksdkf(post, {Matrix::Identity(3, 3)});
  CHECK(penalty_l1 == doctest::Approx(post.s.col(0).squaredNorm()).epsilon(1e-12));

  post.s = random_matrix(rng, 3, 2, 2.0);
  double w = 0.37;
  auto per_param = cost_ksdkf(post, {w * Matrix::Identity(3, 3), w * Matrix::Identity(3, 3)});
  auto stacked = cost_adkf(post, w * Matrix::Identity(2, 2));
  CHECK(per_param.second == doctest::Approx(stacked.second).epsilon(1e-12));
  CHECK(per_param.first == doctest::Approx(stacked.first).epsilon(1e-12));
}

TEST_CASE("step record satisfies cost_total = trace_p + cost_penalty") {
  BenchmarkSetup setup = make_benchmark();
  WeightingScheme scheme = Adkf{setup.w_a_reference};
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  CaseRng rng(309, 0);
  for (int k = 0; k < 10; ++k) {
    Vector z = rng.normal_vector(2);
    auto [next, record] = step(state, z, setup.model, setup.p_hat, scheme);
    CHECK(record.cost_total ==
          doctest::Approx(record.trace_p + record.cost_penalty).epsilon(1e-12));
    CHECK(record.trace_p == doctest::Approx(next.p_cov.trace()).epsilon(1e-12));
    state = next;
  }
}

TEST_CASE("conventional scheme reproduces a hand-rolled Kalman filter") {
  Matrix phi(2, 2);
  phi << 0.95, 0.1, 0.0, 0.85;
  Matrix h(1, 2);
  h << 1.0, 0.0;
  Matrix q = 0.05 * Matrix::Identity(2, 2);
  Matrix r = 0.5 * Matrix::Identity(1, 1);
  ParametricDiscreteModel model = raw_model(phi, h, q, r, 1);
  ParameterVector p_hat = ParameterVector::Zero(1);

  Vector x0(2);
  x0 << 2.0, -1.0;
  Matrix p0 = Matrix::Identity(2, 2);
  FilterState state = make_initial_state(x0, p0, 1);

  Vector x_ref = x0;
  Matrix p_ref = p0;
  CaseRng rng(310, 0);
  for (int k = 0; k < 20; ++k) {
    Vector z = rng.normal_vector(1);
    auto [next, record] = step(state, z, model, p_hat, Conventional{});
    state = next;

    x_ref = phi * x_ref;
    p_ref = phi * p_ref * phi.transpose() + q;
    Matrix xi = h * p_ref * h.transpose() + r;
    Matrix k_ref = (p_ref * h.transpose()) * xi.inverse();
    x_ref = x_ref + k_ref * (z - h * x_ref);
    Matrix joseph = Matrix::Identity(2, 2) - k_ref * h;
    p_ref = joseph * p_ref * joseph.transpose() + k_ref * r * k_ref.transpose();

    CHECK((state.xhat - x_ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((state.p_cov - symmetrize(p_ref)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(state.s.isZero());
  }
}

TEST_CASE("zero-weight desensitized schemes walk the conventional trajectory") {
  BenchmarkSetup setup = make_benchmark();
  FilterState conv = make_initial_state(setup.x0, setup.p0_cov, 2);
  FilterState desens = conv;
  FilterState per_param = conv;
  WeightingScheme zero_adkf = Adkf{Matrix::Zero(2, 2)};
  WeightingScheme zero_ksdkf = Ksdkf{{Matrix::Zero(2, 2), Matrix::Zero(2, 2)}};
  CaseRng rng(311, 0);
  for (int k = 0; k < 25; ++k) {
    Vector z = rng.normal_vector(2);
    conv = step(conv, z, setup.model, setup.p_hat, Conventional{}).first;
    desens = step(desens, z, setup.model, setup.p_hat, zero_adkf).first;
    per_param = step(per_param, z, setup.model, setup.p_hat, zero_ksdkf).first;
    CHECK((conv.xhat - desens.xhat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((conv.p_cov - desens.p_cov).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((conv.xhat - per_param.xhat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((conv.p_cov - per_param.p_cov).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("covariance stays symmetric PSD across a benchmark run for every scheme") {
  BenchmarkSetup setup = make_benchmark();
  std::vector<WeightingScheme> schemes = {
      Conventional{}, Adkf{setup.w_a_reference},
      Ksdkf{{0.1 * Matrix::Identity(2, 2), 0.1 * Matrix::Identity(2, 2)}}};
  for (const WeightingScheme& scheme : schemes) {
    FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
    CaseRng rng(312, 0);
    for (int k = 0; k < 50; ++k) {
      Vector z = rng.normal_vector(2);
      state = step(state, z, setup.model, setup.p_hat, scheme).first;
      CHECK(relative_asymmetry(state.p_cov) <= 1e-10);
      CHECK(min_eigenvalue_sym(state.p_cov) >= -1e-10 * state.p_cov.trace());
    }
  }
}

TEST_CASE("one-step desensitized cost never exceeds the conventional-gain cost") {
  BenchmarkSetup setup = make_benchmark();
  WeightingScheme scheme = Adkf{setup.w_a_reference};
  FilterState state = make_initial_state(setup.x0, setup.p0_cov, 2);
  CaseRng rng(313, 0);
  bool any_strict = false;
  for (int k = 0; k < 25; ++k) {
    FilterState prior = time_update(state, setup.model, setup.p_hat);
    Matrix gamma = innovation_matrix(prior, setup.model, setup.p_hat);
    Matrix k_desens = gain_adkf(prior, gamma, setup.w_a_reference, setup.model, setup.p_hat);
    Matrix k_conv = gain_kf(prior, setup.model, setup.p_hat);
    double j_desens = update_cost(prior, k_desens, setup.model, setup.p_hat, scheme);
    double j_conv = update_cost(prior, k_conv, setup.model, setup.p_hat, scheme);
    CHECK(j_desens <= j_conv + 1e-12 * std::abs(j_conv));
    if (prior.s.cwiseAbs().maxCoeff() > 1e-9) {
      CHECK(j_desens < j_conv);
      any_strict = true;
    }
    Vector z = rng.normal_vector(2);
    state = measurement_update(prior, k_desens, z, setup.model, setup.p_hat, scheme).first;
  }
  CHECK(any_strict);
}

TEST_CASE("validate_scheme rejects malformed weights") {
  CHECK_NOTHROW(validate_scheme(Conventional{}, 2, 2));
  CHECK_NOTHROW(validate_scheme(Adkf{Matrix::Identity(2, 2)}, 3, 2));
  CHECK_THROWS_AS(validate_scheme(Adkf{Matrix::Identity(3, 3)}, 2, 2), ConfigError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(validate_scheme(Adkf{indefinite}, 2, 2), ConfigError);
  CHECK_THROWS_AS(validate_scheme(Ksdkf{{Matrix::Identity(2, 2)}}, 2, 2), ConfigError);
  CHECK_THROWS_AS(
      validate_scheme(Ksdkf{{Matrix::Identity(2, 2), Matrix::Identity(3, 3)}}, 2, 2),
      ConfigError);
}

TEST_CASE("gain dimension mismatches are rejected") {
  BenchmarkSetup setup = make_benchmark();
  FilterState prior = benchmark_prior();
  Matrix bad_gamma = Matrix::Zero(3, 2);
  CHECK_THROWS_AS(gain_adkf(prior, bad_gamma, Matrix::Zero(2, 2), setup.model, setup.p_hat),
                  DimensionError);
  Vector short_z = Vector::Zero(1);
  Matrix k = gain_kf(prior, setup.model, setup.p_hat);
  CHECK_THROWS_AS(
      measurement_update(prior, k, short_z, setup.model, setup.p_hat, Conventional{}),
      DimensionError);
}
