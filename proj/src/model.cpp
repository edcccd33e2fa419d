#include "desense/model.hpp"

#include <json.hpp>

#include "desense/errors.hpp"

namespace desense {

namespace {

template <typename TimeT>
void check_parameter(const ParametricModel<TimeT>& model, const ParameterVector& p,
                     const char* who) {
  if (p.size() != model.param_dim) {
    throw DimensionError(std::string(who) + ": parameter vector has length " +
                         std::to_string(p.size()) + ", model expects " +
                         std::to_string(model.param_dim));
  }
  if (!all_finite(p)) throw DimensionError(std::string(who) + ": parameter vector not finite");
}

template <typename TimeT>
Matrix eval_phi_impl(const ParametricModel<TimeT>& model, const ParameterVector& p, TimeT t) {
  check_parameter(model, p, "eval_phi");
  Matrix out = model.phi(p, t);
  if (out.rows() != model.state_dim || out.cols() != model.state_dim) {
    throw DimensionError("eval_phi: model returned " + std::to_string(out.rows()) + "x" +
                         std::to_string(out.cols()) + ", expected square of " +
                         std::to_string(model.state_dim));
  }
  return out;
}

template <typename TimeT>
Matrix eval_h_impl(const ParametricModel<TimeT>& model, const ParameterVector& p, TimeT t) {
  check_parameter(model, p, "eval_h");
  Matrix out = model.h(p, t);
  if (out.rows() != model.meas_dim || out.cols() != model.state_dim) {
    throw DimensionError("eval_h: model returned " + std::to_string(out.rows()) + "x" +
                         std::to_string(out.cols()) + ", expected " +
                         std::to_string(model.meas_dim) + "x" + std::to_string(model.state_dim));
  }
  return out;
}

template <typename TimeT>
Matrix phi_action_impl(const ParametricModel<TimeT>& model, const ParameterVector& p,
                       const Vector& x, TimeT t) {
  check_parameter(model, p, "phi_jacobian_action");
  if (x.size() != model.state_dim)
    throw DimensionError("phi_jacobian_action: state vector has wrong length");
  Matrix out(model.state_dim, model.param_dim);
  for (int i = 0; i < model.param_dim; ++i) out.col(i) = model.dphi(p, i, t) * x;
  return out;
}

template <typename TimeT>
Matrix h_action_impl(const ParametricModel<TimeT>& model, const ParameterVector& p, const Vector& x,
                     TimeT t) {
  check_parameter(model, p, "h_jacobian_action");
  if (x.size() != model.state_dim)
    throw DimensionError("h_jacobian_action: state vector has wrong length");
  Matrix out(model.meas_dim, model.param_dim);
  for (int i = 0; i < model.param_dim; ++i) out.col(i) = model.dh(p, i, t) * x;
  return out;
}

template <typename ModelT>
ModelT make_constant_impl(const Matrix& phi0, const Matrix& h0, const Matrix& q, const Matrix& r,
                          int param_dim) {
  if (param_dim < 1) throw DimensionError("constant model: param_dim must be >= 1");
  ModelT model;
  model.state_dim = static_cast<int>(phi0.rows());
  model.meas_dim = static_cast<int>(h0.rows());
  model.param_dim = param_dim;
  int n = model.state_dim;
  int m = model.meas_dim;
  model.phi = [phi0](const ParameterVector&, auto) { return phi0; };
  model.h = [h0](const ParameterVector&, auto) { return h0; };
  model.dphi = [n](const ParameterVector&, int, auto) { return Matrix::Zero(n, n).eval(); };
  model.dh = [m, n](const ParameterVector&, int, auto) { return Matrix::Zero(m, n).eval(); };
  model.q = q;
  model.r = r;
  validate_model(model);
  return model;
}

template <typename ModelT>
ModelT make_affine_impl(const Matrix& phi0, const std::vector<Matrix>& dphi, const Matrix& h0,
                        const std::vector<Matrix>& dh, const Matrix& q, const Matrix& r) {
  if (dphi.empty()) throw DimensionError("affine model: need at least one transition derivative");
  if (!dh.empty() && dh.size() != dphi.size())
    throw DimensionError("affine model: dh list must be empty or match dphi length");
  ModelT model;
  model.state_dim = static_cast<int>(phi0.rows());
  model.meas_dim = static_cast<int>(h0.rows());
  model.param_dim = static_cast<int>(dphi.size());
  int m = model.meas_dim;
  int n = model.state_dim;
  model.phi = [phi0, dphi](const ParameterVector& p, auto) {
    Matrix out = phi0;
    for (int i = 0; i < static_cast<int>(dphi.size()); ++i) out += p(i) * dphi[i];
    return out;
  };
  model.h = [h0, dh](const ParameterVector& p, auto) {
    Matrix out = h0;
    for (int i = 0; i < static_cast<int>(dh.size()); ++i) out += p(i) * dh[i];
    return out;
  };
  model.dphi = [dphi](const ParameterVector&, int i, auto) { return dphi.at(i); };
  if (dh.empty()) {
    model.dh = [m, n](const ParameterVector&, int, auto) { return Matrix::Zero(m, n).eval(); };
  } else {
    model.dh = [dh](const ParameterVector&, int i, auto) { return dh.at(i); };
  }
  model.q = q;
  model.r = r;
  validate_model(model);
  return model;
}

template <typename ModelT, typename TimeT>
ModelT with_fd_impl(ModelT model, double step) {
  if (!(step > 0.0)) throw DimensionError("with_fd_derivatives: step must be positive");
  auto phi = model.phi;
  auto h = model.h;
  model.dphi = [phi, step](const ParameterVector& p, int i, TimeT t) {
    ParameterVector hi = p, lo = p;
    hi(i) += step;
    lo(i) -= step;
    return ((phi(hi, t) - phi(lo, t)) / (2.0 * step)).eval();
  };
  model.dh = [h, step](const ParameterVector& p, int i, TimeT t) {
    ParameterVector hi = p, lo = p;
    hi(i) += step;
    lo(i) -= step;
    return ((h(hi, t) - h(lo, t)) / (2.0 * step)).eval();
  };
  return model;
}

template <typename ModelT>
void validate_model_impl(const ModelT& model, const char* kind) {
  auto fail = [&](const std::string& msg) { throw ConfigError(std::string(kind) + ": " + msg); };
  if (model.state_dim < 1 || model.meas_dim < 1 || model.param_dim < 1)
    fail("dimensions must all be >= 1");
  if (!model.phi || !model.h || !model.dphi || !model.dh)
    fail("phi, h and their derivative maps must all be set");
  if (model.q.rows() != model.state_dim || model.q.cols() != model.state_dim)
    fail("q must be state_dim x state_dim");
  if (model.r.rows() != model.meas_dim || model.r.cols() != model.meas_dim)
    fail("r must be meas_dim x meas_dim");
  if (!all_finite(model.q) || !all_finite(model.r)) fail("q and r must be finite");
  if (relative_asymmetry(model.q) > 1e-10) fail("q must be symmetric");
  if (relative_asymmetry(model.r) > 1e-10) fail("r must be symmetric");
  if (min_eigenvalue_sym(model.q) <= 0.0) fail("q must be positive definite");
  if (min_eigenvalue_sym(model.r) <= 0.0) fail("r must be positive definite");
}

Matrix json_matrix(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("key '" + key + "': expected a nested array of numbers");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j[0].size());
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw ConfigError("key '" + key + "': ragged rows in matrix");
    for (int c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ConfigError("key '" + key + "': non-numeric entry");
      out(i, c) = j[i][c].get<double>();
    }
  }
  return out;
}

}  // namespace

Matrix eval_phi(const ParametricDiscreteModel& model, const ParameterVector& p, int epoch) {
  return eval_phi_impl(model, p, epoch);
}
Matrix eval_h(const ParametricDiscreteModel& model, const ParameterVector& p, int epoch) {
  return eval_h_impl(model, p, epoch);
}
Matrix eval_phi(const ParametricContinuousModel& model, const ParameterVector& p, double t) {
  return eval_phi_impl(model, p, t);
}
Matrix eval_h(const ParametricContinuousModel& model, const ParameterVector& p, double t) {
  return eval_h_impl(model, p, t);
}

Matrix phi_jacobian_action(const ParametricDiscreteModel& model, const ParameterVector& p,
                           const Vector& x, int epoch) {
  return phi_action_impl(model, p, x, epoch);
}
Matrix phi_jacobian_action(const ParametricContinuousModel& model, const ParameterVector& p,
                           const Vector& x, double t) {
  return phi_action_impl(model, p, x, t);
}
Matrix h_jacobian_action(const ParametricDiscreteModel& model, const ParameterVector& p,
                         const Vector& x, int epoch) {
  return h_action_impl(model, p, x, epoch);
}
Matrix h_jacobian_action(const ParametricContinuousModel& model, const ParameterVector& p,
                         const Vector& x, double t) {
  return h_action_impl(model, p, x, t);
}

BenchmarkSetup make_benchmark() {
  BenchmarkSetup setup;
  Matrix phi0(2, 2);
  phi0 << 1.0, 0.1, -0.5, 0.9;
  std::vector<Matrix> dphi(2, Matrix::Zero(2, 2));
  dphi[0](0, 1) = 1.0;  // transition entry (0,1) is 0.1 + first parameter
  dphi[1](1, 0) = 1.0;  // transition entry (1,0) is second parameter - 0.5
  Matrix h0 = Matrix::Identity(2, 2);
  Matrix q = 0.1 * Matrix::Identity(2, 2);
  Matrix r = Matrix::Identity(2, 2);
  setup.model = make_affine_discrete_model(phi0, dphi, h0, {}, q, r);
  setup.p_hat = Vector::Zero(2);
  setup.x0 = Vector(2);
  setup.x0 << 10.0, -10.0;
  setup.p0_cov = 0.1 * Matrix::Identity(2, 2);
  setup.param_ranges = {{-0.1, 0.1}, {-0.5, 0.5}};
  // Nine tenths of the variances of the uniform parameter draws.
  setup.w_a_reference = Matrix::Zero(2, 2);
  setup.w_a_reference(0, 0) = 0.003;
  setup.w_a_reference(1, 1) = 0.075;
  return setup;
}

ParametricDiscreteModel make_constant_discrete_model(const Matrix& phi0, const Matrix& h0,
                                                     const Matrix& q, const Matrix& r,
                                                     int param_dim) {
  return make_constant_impl<ParametricDiscreteModel>(phi0, h0, q, r, param_dim);
}
ParametricContinuousModel make_constant_continuous_model(const Matrix& phi0, const Matrix& h0,
                                                         const Matrix& q, const Matrix& r,
                                                         int param_dim) {
  return make_constant_impl<ParametricContinuousModel>(phi0, h0, q, r, param_dim);
}

ParametricDiscreteModel make_affine_discrete_model(const Matrix& phi0,
                                                   const std::vector<Matrix>& dphi,
                                                   const Matrix& h0, const std::vector<Matrix>& dh,
                                                   const Matrix& q, const Matrix& r) {
  return make_affine_impl<ParametricDiscreteModel>(phi0, dphi, h0, dh, q, r);
}
ParametricContinuousModel make_affine_continuous_model(const Matrix& phi0,
                                                       const std::vector<Matrix>& dphi,
                                                       const Matrix& h0,
                                                       const std::vector<Matrix>& dh,
                                                       const Matrix& q, const Matrix& r) {
  return make_affine_impl<ParametricContinuousModel>(phi0, dphi, h0, dh, q, r);
}

ParametricDiscreteModel with_fd_derivatives(ParametricDiscreteModel model, double step) {
  return with_fd_impl<ParametricDiscreteModel, int>(std::move(model), step);
}
ParametricContinuousModel with_fd_derivatives(ParametricContinuousModel model, double step) {
  return with_fd_impl<ParametricContinuousModel, double>(std::move(model), step);
}

ParametricDiscreteModel load_discrete_model_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model JSON: expected an object");
  for (const char* key : {"phi", "h", "q", "r"}) {
    if (!j.contains(key)) throw ConfigError(std::string("model JSON: missing key '") + key + "'");
  }
  Matrix phi0 = json_matrix(j["phi"], "phi");
  Matrix h0 = json_matrix(j["h"], "h");
  Matrix q = json_matrix(j["q"], "q");
  Matrix r = json_matrix(j["r"], "r");
  int param_dim = j.value("param_dim", 1);
  try {
    return make_constant_discrete_model(phi0, h0, q, r, param_dim);
  } catch (const FilterError& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

void validate_model(const ParametricDiscreteModel& model) {
  validate_model_impl(model, "discrete model");
}
void validate_model(const ParametricContinuousModel& model) {
  validate_model_impl(model, "continuous model");
}

}  // namespace desense
