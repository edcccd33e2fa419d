#include "desense/montecarlo.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "desense/errors.hpp"

namespace desense {

namespace {

/// Symmetric PSD square root; tolerates singular covariances.
Matrix covariance_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
  Vector eigs = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * eigs.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::uint64_t fnv1a_fold(std::uint64_t hash, double value) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(value));
  std::memcpy(&bits, &value, sizeof(bits));
  return fnv1a_fold(hash, bits);
}

std::uint64_t fnv1a_fold(std::uint64_t hash, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) hash = fnv1a_fold(hash, v(i));
  return hash;
}

void validate_config(const ExperimentConfig& cfg) {
  validate_model(cfg.model);
  if (cfg.n_cases < 1) throw ConfigError("n_cases must be >= 1");
  if (cfg.n_epochs < 1) throw ConfigError("n_epochs must be >= 1");
  if (cfg.p_hat.size() != cfg.model.param_dim)
    throw ConfigError("p_hat length must match the model's parameter count");
  if (cfg.x0.size() != cfg.model.state_dim) throw ConfigError("x0 length must match state_dim");
  if (cfg.p0_cov.rows() != cfg.model.state_dim || cfg.p0_cov.cols() != cfg.model.state_dim ||
      !is_psd(cfg.p0_cov))
    throw ConfigError("p0_cov must be a symmetric PSD state_dim x state_dim matrix");
  if (static_cast<int>(cfg.param_ranges.size()) != cfg.model.param_dim)
    throw ConfigError("param_ranges must list one [low, high] pair per parameter");
  for (const ParamRange& range : cfg.param_ranges) {
    if (!(range.low < range.high)) throw ConfigError("param_ranges entries need low < high");
  }
  if (cfg.schemes.empty()) throw ConfigError("at least one scheme is required");
  for (const SchemeSpec& spec : cfg.schemes) {
    if (spec.name.empty()) throw ConfigError("every scheme needs a name");
    validate_scheme(spec.scheme, cfg.model.state_dim, cfg.model.param_dim,
                    "scheme '" + spec.name + "'");
  }
  if (cfg.reference_w.size() != 0) {
    if (cfg.reference_w.rows() != cfg.model.param_dim ||
        cfg.reference_w.cols() != cfg.model.param_dim || !is_psd(cfg.reference_w))
      throw ConfigError("reference_w must be a symmetric PSD param_dim x param_dim matrix");
  }
}

Matrix resolve_reference_weight(const ExperimentConfig& cfg) {
  if (cfg.reference_w.size() != 0) return cfg.reference_w;
  for (const SchemeSpec& spec : cfg.schemes) {
    if (const Adkf* a = std::get_if<Adkf>(&spec.scheme)) return a->w_a;
  }
  return Matrix::Zero(cfg.model.param_dim, cfg.model.param_dim);
}

ParameterVector draw_parameters(CaseRng& rng, const std::vector<ParamRange>& ranges) {
  ParameterVector p(static_cast<Eigen::Index>(ranges.size()));
  for (int i = 0; i < static_cast<int>(ranges.size()); ++i)
    p(i) = rng.uniform(ranges[i].low, ranges[i].high);
  return p;
}

TruthTrajectory simulate_truth(const ParametricDiscreteModel& model, const ParameterVector& p_true,
                               const Vector& x0, CaseRng& rng, int n_epochs) {
  Matrix q_sqrt = covariance_sqrt(model.q);
  Matrix r_sqrt = covariance_sqrt(model.r);
  TruthTrajectory truth;
  truth.states.reserve(n_epochs + 1);
  truth.measurements.reserve(n_epochs);
  truth.states.push_back(x0);
  for (int k = 0; k < n_epochs; ++k) {
    Vector w = q_sqrt * rng.normal_vector(model.state_dim);
    Vector x = eval_phi(model, p_true, k) * truth.states.back() + w;
    Vector v = r_sqrt * rng.normal_vector(model.meas_dim);
    Vector z = eval_h(model, p_true, k + 1) * x + v;
    truth.states.push_back(std::move(x));
    truth.measurements.push_back(std::move(z));
  }
  return truth;
}

CaseResult run_case(const ExperimentConfig& cfg, int case_index) {
  CaseResult result;
  int n = cfg.model.state_dim;
  int n_epochs = cfg.n_epochs;
  Matrix w_ref = resolve_reference_weight(cfg);

  CaseRng rng(cfg.seed, static_cast<std::uint64_t>(case_index));
  ParameterVector p_true = draw_parameters(rng, cfg.param_ranges);
  Vector x0_hat = cfg.x0;
  if (cfg.init_error_draw) x0_hat += covariance_sqrt(cfg.p0_cov) * rng.normal_vector(n);
  TruthTrajectory truth = simulate_truth(cfg.model, p_true, cfg.x0, rng, n_epochs);

  std::uint64_t digest = fnv1a_init();
  digest = fnv1a_fold(digest, p_true);
  for (const Vector& x : truth.states) digest = fnv1a_fold(digest, x);
  for (const Vector& z : truth.measurements) digest = fnv1a_fold(digest, z);
  result.noise_digest = digest;

  result.max_cov_asymmetry = 0.0;
  result.min_cov_eig_ratio = std::numeric_limits<double>::infinity();
  try {
    for (const SchemeSpec& spec : cfg.schemes) {
      SchemeTrace trace;
      trace.sq_err = Matrix::Zero(n_epochs, n);
      trace.trace_p = Vector::Zero(n_epochs);
      trace.penalty = Vector::Zero(n_epochs);
      trace.cost = Vector::Zero(n_epochs);
      FilterState state = make_initial_state(x0_hat, cfg.p0_cov, cfg.model.param_dim);
      for (int k = 0; k < n_epochs; ++k) {
        auto [next, record] = step(state, truth.measurements[k], cfg.model, cfg.p_hat, spec.scheme);
        state = std::move(next);
        Vector err = state.xhat - truth.states[k + 1];
        trace.sq_err.row(k) = err.array().square().matrix().transpose();
        trace.trace_p(k) = record.trace_p;
        // Every scheme is scored under the one reference metric so the
        // curves are comparable across filters.
        trace.penalty(k) = cost_adkf(state, w_ref).second;
        trace.cost(k) = trace.trace_p(k) + trace.penalty(k);

        result.max_cov_asymmetry =
            std::max(result.max_cov_asymmetry, relative_asymmetry(state.p_cov));
        double tr = state.p_cov.trace();
        double ratio = tr > 0.0 ? min_eigenvalue_sym(state.p_cov) / tr
                                : min_eigenvalue_sym(state.p_cov);
        result.min_cov_eig_ratio = std::min(result.min_cov_eig_ratio, ratio);
      }
      result.traces.push_back(std::move(trace));
    }
  } catch (const FilterError& e) {
    result.ok = false;
    result.error = e.what();
    result.traces.clear();
  }
  return result;
}

ExperimentReport aggregate_results(const ExperimentConfig& cfg,
                                   const std::vector<CaseResult>& results) {
  int n = cfg.model.state_dim;
  int n_epochs = cfg.n_epochs;
  int n_schemes = static_cast<int>(cfg.schemes.size());

  ExperimentReport report;
  for (const SchemeSpec& spec : cfg.schemes) report.scheme_names.push_back(spec.name);
  report.n_cases = static_cast<int>(results.size());
  report.rms.assign(n_schemes, Matrix::Zero(n_epochs, n));
  report.mean_cost.assign(n_schemes, Vector::Zero(n_epochs));
  report.mean_penalty.assign(n_schemes, Vector::Zero(n_epochs));
  report.mean_trace_p.assign(n_schemes, Vector::Zero(n_epochs));
  report.max_cov_asymmetry = 0.0;
  report.min_cov_eig_ratio = std::numeric_limits<double>::infinity();

  std::uint64_t digest = fnv1a_init();
  int n_ok = 0;
  for (int c = 0; c < static_cast<int>(results.size()); ++c) {
    const CaseResult& result = results[c];
    digest = fnv1a_fold(digest, result.noise_digest);
    if (!result.ok) {
      report.failed_cases += 1;
      report.failed_case_indices.push_back(c);
      continue;
    }
    n_ok += 1;
    for (int s = 0; s < n_schemes; ++s) {
      report.rms[s] += result.traces[s].sq_err;
      report.mean_cost[s] += result.traces[s].cost;
      report.mean_penalty[s] += result.traces[s].penalty;
      report.mean_trace_p[s] += result.traces[s].trace_p;
    }
    report.max_cov_asymmetry = std::max(report.max_cov_asymmetry, result.max_cov_asymmetry);
    report.min_cov_eig_ratio = std::min(report.min_cov_eig_ratio, result.min_cov_eig_ratio);
  }
  report.noise_digest = digest;
  if (n_ok == 0) throw ExperimentError("no case finished without a numeric failure");
  for (int s = 0; s < n_schemes; ++s) {
    report.rms[s] = (report.rms[s] / static_cast<double>(n_ok)).cwiseSqrt();
    report.mean_cost[s] /= static_cast<double>(n_ok);
    report.mean_penalty[s] /= static_cast<double>(n_ok);
    report.mean_trace_p[s] /= static_cast<double>(n_ok);
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, int n_jobs) {
  validate_config(cfg);
  std::vector<CaseResult> results(cfg.n_cases);
  int workers = std::max(1, std::min(n_jobs, cfg.n_cases));
  if (workers == 1) {
    for (int c = 0; c < cfg.n_cases; ++c) results[c] = run_case(cfg, c);
  } else {
    std::atomic<int> next_case{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
      try {
        while (true) {
          int c = next_case.fetch_add(1);
          if (c >= cfg.n_cases) break;
          results[c] = run_case(cfg, c);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    };
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return aggregate_results(cfg, results);
}

ExperimentConfig make_benchmark_experiment(std::uint64_t seed) {
  BenchmarkSetup setup = make_benchmark();
  ExperimentConfig cfg;
  cfg.model = setup.model;
  cfg.p_hat = setup.p_hat;
  cfg.n_cases = 5000;
  cfg.n_epochs = 50;
  cfg.seed = seed;
  cfg.x0 = setup.x0;
  cfg.p0_cov = setup.p0_cov;
  cfg.param_ranges = setup.param_ranges;
  Matrix w_iso = 0.1 * Matrix::Identity(2, 2);
  cfg.schemes = {
      {"kf", Conventional{}},
      {"adkf", Adkf{setup.w_a_reference}},
      {"ksdkf_eq", Ksdkf{{setup.w_a_reference, setup.w_a_reference}}},
      {"ksdkf_iso", Ksdkf{{w_iso, w_iso}}},
  };
  return cfg;
}

}  // namespace desense
