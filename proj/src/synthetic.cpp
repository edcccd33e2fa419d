#include "desense/synthetic.hpp"

#include <Eigen/Eigenvalues>

namespace desense {

Matrix random_matrix(CaseRng& rng, int rows, int cols, double scale) {
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = rng.uniform(-scale, scale);
  return out;
}

Matrix random_spd(CaseRng& rng, int n, double scale, double ridge) {
  Matrix a = random_matrix(rng, n, n, scale);
  return (a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n)).eval();
}

Matrix random_stable_matrix(CaseRng& rng, int n, double spectral_radius) {
  Matrix a = random_matrix(rng, n, n);
  double radius = a.eigenvalues().cwiseAbs().maxCoeff();
  if (radius == 0.0) return a;
  return (a * (spectral_radius / radius)).eval();
}

ParametricDiscreteModel make_random_discrete_model(CaseRng& rng, int state_dim, int meas_dim,
                                                   int param_dim) {
  Matrix phi0 = random_stable_matrix(rng, state_dim, 0.9);
  std::vector<Matrix> dphi, dh;
  for (int i = 0; i < param_dim; ++i) dphi.push_back(random_matrix(rng, state_dim, state_dim, 0.5));
  Matrix h0 = random_matrix(rng, meas_dim, state_dim, 1.0);
  for (int i = 0; i < param_dim; ++i) dh.push_back(random_matrix(rng, meas_dim, state_dim, 0.3));
  Matrix q = random_spd(rng, state_dim, 0.5, 1e-2);
  Matrix r = random_spd(rng, meas_dim, 1.0, 1e-1);
  return make_affine_discrete_model(phi0, dphi, h0, dh, q, r);
}

ParametricContinuousModel make_random_continuous_model(CaseRng& rng, int state_dim, int meas_dim,
                                                       int param_dim) {
  Matrix a = random_matrix(rng, state_dim, state_dim);
  double shift = a.eigenvalues().real().maxCoeff() + 0.5;
  Matrix phi0 = a - shift * Matrix::Identity(state_dim, state_dim);
  std::vector<Matrix> dphi, dh;
  for (int i = 0; i < param_dim; ++i) dphi.push_back(random_matrix(rng, state_dim, state_dim, 0.5));
  Matrix h0 = random_matrix(rng, meas_dim, state_dim, 1.0);
  for (int i = 0; i < param_dim; ++i) dh.push_back(random_matrix(rng, meas_dim, state_dim, 0.3));
  Matrix q = random_spd(rng, state_dim, 0.5, 1e-2);
  Matrix r = random_spd(rng, meas_dim, 1.0, 1e-1);
  return make_affine_continuous_model(phi0, dphi, h0, dh, q, r);
}

FilterState make_random_prior(CaseRng& rng, int state_dim, int param_dim) {
  FilterState prior;
  prior.xhat = random_matrix(rng, state_dim, 1, 5.0);
  prior.p_cov = random_spd(rng, state_dim, 1.0, 1e-2);
  prior.s = random_matrix(rng, state_dim, param_dim, 1.0);
  prior.epoch = 1;
  return prior;
}

}  // namespace desense
