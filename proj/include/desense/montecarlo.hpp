#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desense/filter_discrete.hpp"
#include "desense/model.hpp"
#include "desense/rng.hpp"

namespace desense {

/// Named weighting scheme, e.g. {"adkf", Adkf{w_a}}.
struct SchemeSpec {
  std::string name;
  WeightingScheme scheme;
};

struct ExperimentConfig {
  ParametricDiscreteModel model;
  ParameterVector p_hat;
  int n_cases = 5000;
  int n_epochs = 50;
  std::uint64_t seed = 1;
  Vector x0;
  Matrix p0_cov;
  std::vector<ParamRange> param_ranges;  // one per parameter, drawn uniformly
  std::vector<SchemeSpec> schemes;
  /// Weight for the common cost metric all schemes are reported under
  /// (trace(P) + trace(S W Sᵀ)). Empty: defaults to the first Adkf scheme's
  /// w_a, or zero if no Adkf scheme is present.
  Matrix reference_w;
  /// When true, the initial estimate is drawn as x0 + N(0, p0_cov) instead of
  /// being set to x0 exactly.
  bool init_error_draw = false;
};

struct TruthTrajectory {
  std::vector<Vector> states;        // x_0 .. x_N
  std::vector<Vector> measurements;  // z_1 .. z_N
};

/// Per-epoch traces for one scheme within one case.
struct SchemeTrace {
  Matrix sq_err;    // n_epochs x n, squared estimation error after each update
  Vector trace_p;   // n_epochs
  Vector penalty;   // n_epochs, under the reference weight
  Vector cost;      // n_epochs, trace_p + penalty
};

struct CaseResult {
  bool ok = true;
  std::string error;            // set when ok == false
  std::vector<SchemeTrace> traces;  // one per scheme, config order
  double max_cov_asymmetry = 0.0;   // worst relative |P - Pᵀ| across epochs/schemes
  double min_cov_eig_ratio = 0.0;   // worst min-eigenvalue / trace(P)
  std::uint64_t noise_digest = 0;   // FNV-1a over the parameter draw, truth and measurements
};

struct ExperimentReport {
  std::vector<std::string> scheme_names;
  std::vector<Matrix> rms;         // per scheme: n_epochs x n
  std::vector<Vector> mean_cost;   // per scheme: n_epochs
  std::vector<Vector> mean_penalty;
  std::vector<Vector> mean_trace_p;
  int n_cases = 0;
  int failed_cases = 0;
  std::vector<int> failed_case_indices;
  double max_cov_asymmetry = 0.0;
  double min_cov_eig_ratio = 0.0;
  std::uint64_t noise_digest = 0;  // per-case digests folded in case order
};

inline std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ULL; }

inline std::uint64_t fnv1a_fold(std::uint64_t hash, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    hash ^= (word >> (8 * i)) & 0xffULL;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a_fold(std::uint64_t hash, double value);
std::uint64_t fnv1a_fold(std::uint64_t hash, const Vector& v);

void validate_config(const ExperimentConfig& cfg);

/// The weight actually used for reporting (see ExperimentConfig::reference_w).
Matrix resolve_reference_weight(const ExperimentConfig& cfg);

/// One uniform draw per parameter, in range order.
ParameterVector draw_parameters(CaseRng& rng, const std::vector<ParamRange>& ranges);

/// x_{k+1} = Phi(p_true) x_k + w_k, z_{k+1} = H(p_true) x_{k+1} + v_k, with
/// w ~ N(0, Q) and v ~ N(0, R) drawn epoch by epoch (w before v) from rng.
TruthTrajectory simulate_truth(const ParametricDiscreteModel& model, const ParameterVector& p_true,
                               const Vector& x0, CaseRng& rng, int n_epochs);

/// Runs every scheme in cfg against one sampled case. All schemes see the
/// identical truth/measurement sequence; draw order within the case is
/// parameters, optional initial-estimate error, then per-epoch noise.
CaseResult run_case(const ExperimentConfig& cfg, int case_index);

/// Deterministic reduction of per-case results in case order. Failed cases
/// are excluded from the averages and listed; throws ExperimentError when
/// no case succeeded.
ExperimentReport aggregate_results(const ExperimentConfig& cfg,
                                   const std::vector<CaseResult>& results);

/// Runs all cases (n_jobs threads) and aggregates. Results are identical for
/// any n_jobs because cases own independent RNG substreams and aggregation
/// is ordered.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int n_jobs = 1);

/// Benchmark experiment preset: two-state model, 5000 cases, 50 epochs,
/// schemes kf / adkf / ksdkf_eq / ksdkf_iso.
ExperimentConfig make_benchmark_experiment(std::uint64_t seed);

}  // namespace desense
