#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "desense/errors.hpp"
#include "desense/io.hpp"
#include "desense/montecarlo.hpp"
#include "desense/selfcheck.hpp"
#include "desense/version.hpp"

namespace {

using namespace desense;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitExperiment = 3;

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
  bool verbose = false;
};

struct VerifyOptions {
  bool verbose = false;
  double perturb_gain = 0.0;
};

struct CompareOptions {
  std::vector<std::string> run_dirs;
};

std::uint64_t resolve_seed(const RunOptions& opts, const ExperimentConfig& cfg,
                           bool config_has_seed) {
  if (opts.seed_given) return opts.seed;
  if (config_has_seed) return cfg.seed;
  if (const char* env = std::getenv("DESENSE_KF_SEED")) {
    char* end = nullptr;
    std::uint64_t value = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw ConfigError(std::string("DESENSE_KF_SEED is not an integer: '") + env + "'");
    return value;
  }
  return cfg.seed;
}

/// Mean over epochs 10..N (1-based); the early transient is skipped.
double settled_mean(const Vector& per_epoch) {
  int n = static_cast<int>(per_epoch.size());
  int first = std::min(9, n - 1);
  return per_epoch.segment(first, n - first).mean();
}

void print_run_summary(const ExperimentReport& report) {
  std::printf("epoch-averaged results (epochs 10..%d):\n",
              static_cast<int>(report.mean_cost[0].size()));
  for (int s = 0; s < static_cast<int>(report.scheme_names.size()); ++s) {
    std::printf("  %-12s", report.scheme_names[s].c_str());
    for (int j = 0; j < report.rms[s].cols(); ++j)
      std::printf("  rms x%d = %.6f", j + 1, settled_mean(report.rms[s].col(j)));
    std::printf("  cost = %.6f  penalty = %.6f\n", settled_mean(report.mean_cost[s]),
                settled_mean(report.mean_penalty[s]));
  }
}

int cmd_run(const RunOptions& opts) {
  std::string text;
  ExperimentConfig cfg;
  bool config_has_seed = false;
  try {
    text = read_text_file(opts.config_path);
    cfg = parse_config_json(text);
    config_has_seed = nlohmann::json::parse(text).contains("seed");
    cfg.seed = resolve_seed(opts, cfg, config_has_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }

  try {
    auto start = std::chrono::steady_clock::now();
    ExperimentReport report = run_experiment(cfg, opts.jobs);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(opts.out_dir);
    auto out_path = [&](const char* name) {
      return (std::filesystem::path(opts.out_dir) / name).string();
    };
    write_text_file(out_path("rms.csv"), render_rms_csv(report));
    write_text_file(out_path("cost.csv"), render_cost_csv(report));

    RunManifest manifest;
    manifest.version = kVersion;
    manifest.seed = cfg.seed;
    manifest.duration_seconds = elapsed;
    manifest.n_cases = report.n_cases;
    manifest.failed_cases = report.failed_cases;
    manifest.scheme_names = report.scheme_names;
    manifest.config_json = config_to_json(cfg);
    manifest.output_files = {"rms.csv", "cost.csv", "manifest.json"};
    write_text_file(out_path("manifest.json"), render_manifest_json(manifest));

    if (opts.verbose) print_run_summary(report);
    std::printf("run complete: %d cases (%d failed), %.2f s, outputs in %s\n", report.n_cases,
                report.failed_cases, elapsed, opts.out_dir.c_str());
    return kExitOk;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "experiment failed: %s\n", e.what());
    return kExitExperiment;
  }
}

int cmd_verify(const VerifyOptions& opts) {
  std::vector<CheckResult> results = run_self_checks(opts.perturb_gain);
  bool all_pass = true;
  for (const CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    if (opts.verbose) {
      std::printf("%s  %-45s  margin %.3e vs threshold %.3e  (%s)\n", r.pass ? "PASS" : "FAIL",
                  r.name.c_str(), r.margin, r.threshold, r.detail.c_str());
    } else {
      std::printf("%s  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str());
    }
  }
  std::printf("%s\n", all_pass ? "all checks passed" : "some checks FAILED");
  return all_pass ? 0 : 1;
}

struct LoadedRun {
  std::string label;
  std::vector<RmsRow> rms;
  std::vector<CostRow> cost;
  int n_epochs = 0;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.label = dir;
  std::filesystem::path base(dir);
  run.rms = parse_rms_csv(read_text_file((base / "rms.csv").string()));
  run.cost = parse_cost_csv(read_text_file((base / "cost.csv").string()));
  for (const RmsRow& row : run.rms) run.n_epochs = std::max(run.n_epochs, row.epoch);
  return run;
}

/// Epoch-averaged (epochs 10..N) rms per (scheme, state) and cost per scheme.
struct RunSummary {
  std::map<std::pair<std::string, int>, double> rms;
  std::map<std::string, std::pair<double, double>> cost;  // (mean_cost, mean_penalty)
};

RunSummary summarize(const LoadedRun& run) {
  int first_epoch = std::min(10, run.n_epochs);
  RunSummary summary;
  std::map<std::pair<std::string, int>, int> rms_counts;
  std::map<std::string, int> cost_counts;
  for (const RmsRow& row : run.rms) {
    if (row.epoch < first_epoch) continue;
    auto key = std::make_pair(row.scheme, row.state_index);
    summary.rms[key] += row.rms;
    rms_counts[key] += 1;
  }
  for (auto& [key, total] : summary.rms) total /= rms_counts[key];
  for (const CostRow& row : run.cost) {
    if (row.epoch < first_epoch) continue;
    summary.cost[row.scheme].first += row.mean_cost;
    summary.cost[row.scheme].second += row.mean_penalty;
    cost_counts[row.scheme] += 1;
  }
  for (auto& [key, totals] : summary.cost) {
    totals.first /= cost_counts[key];
    totals.second /= cost_counts[key];
  }
  return summary;
}

int cmd_compare(const CompareOptions& opts) {
  std::vector<LoadedRun> runs;
  try {
    for (const std::string& dir : opts.run_dirs) runs.push_back(load_run(dir));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "compare: %s\n", e.what());
    return kExitConfig;
  }
  for (const LoadedRun& run : runs) {
    if (run.n_epochs != runs[0].n_epochs) {
      std::fprintf(stderr, "compare: %s has %d epochs, %s has %d; epoch counts must match\n",
                   run.label.c_str(), run.n_epochs, runs[0].label.c_str(), runs[0].n_epochs);
      return kExitConfig;
    }
  }

  std::vector<RunSummary> summaries;
  for (const LoadedRun& run : runs) summaries.push_back(summarize(run));

  std::printf("epoch-averaged summaries (epochs 10..%d)\n", runs[0].n_epochs);
  std::printf("run,scheme,state_index,avg_rms\n");
  for (int i = 0; i < static_cast<int>(runs.size()); ++i)
    for (const auto& [key, value] : summaries[i].rms)
      std::printf("%s,%s,%d,%s\n", runs[i].label.c_str(), key.first.c_str(), key.second,
                  format_double(value).c_str());
  std::printf("run,scheme,avg_cost,avg_penalty\n");
  for (int i = 0; i < static_cast<int>(runs.size()); ++i)
    for (const auto& [scheme, value] : summaries[i].cost)
      std::printf("%s,%s,%s,%s\n", runs[i].label.c_str(), scheme.c_str(),
                  format_double(value.first).c_str(), format_double(value.second).c_str());

  if (runs.size() == 1) {
    // Single run: the delta table compares schemes against the first one.
    const RunSummary& s = summaries[0];
    if (s.cost.empty()) return kExitOk;
    std::string base_scheme = s.cost.begin()->first;
    std::printf("deltas vs scheme %s\n", base_scheme.c_str());
    std::printf("scheme,state_index,delta_rms\n");
    for (const auto& [key, value] : s.rms) {
      auto base = s.rms.find({base_scheme, key.second});
      if (base == s.rms.end()) continue;
      std::printf("%s,%d,%s\n", key.first.c_str(), key.second,
                  format_double(value - base->second).c_str());
    }
    std::printf("scheme,delta_cost,delta_penalty\n");
    for (const auto& [scheme, value] : s.cost)
      std::printf("%s,%s,%s\n", scheme.c_str(),
                  format_double(value.first - s.cost.at(base_scheme).first).c_str(),
                  format_double(value.second - s.cost.at(base_scheme).second).c_str());
    return kExitOk;
  }

  std::printf("deltas vs %s\n", runs[0].label.c_str());
  std::printf("run,scheme,state_index,delta_rms\n");
  for (int i = 1; i < static_cast<int>(runs.size()); ++i)
    for (const auto& [key, value] : summaries[i].rms) {
      auto base = summaries[0].rms.find(key);
      if (base == summaries[0].rms.end()) continue;
      std::printf("%s,%s,%d,%s\n", runs[i].label.c_str(), key.first.c_str(), key.second,
                  format_double(value - base->second).c_str());
    }
  std::printf("run,scheme,delta_cost,delta_penalty\n");
  for (int i = 1; i < static_cast<int>(runs.size()); ++i)
    for (const auto& [scheme, value] : summaries[i].cost) {
      auto base = summaries[0].cost.find(scheme);
      if (base == summaries[0].cost.end()) continue;
      std::printf("%s,%s,%s,%s\n", runs[i].label.c_str(), scheme.c_str(),
                  format_double(value.first - base->second.first).c_str(),
                  format_double(value.second - base->second.second).c_str());
    }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desensitized Kalman filter experiment runner"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Run a Monte-Carlo experiment from a JSON config");
  run->add_option("--config", run_opts.config_path, "Path to the experiment config (JSON)")
      ->required();
  run->add_option("--out", run_opts.out_dir, "Output directory (default: current)");
  run->add_option("--seed", run_opts.seed, "Seed override (wins over config and environment)");
  run->add_option("--jobs", run_opts.jobs, "Worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--verbose", run_opts.verbose, "Print epoch-averaged summaries");

  VerifyOptions verify_opts;
  CLI::App* verify = app.add_subcommand("verify", "Run the built-in verification suite");
  verify->add_flag("--verbose", verify_opts.verbose, "Print numeric margins per check");
  verify->add_option("--perturb-gain", verify_opts.perturb_gain, "Test hook: corrupt gains")
      ->group("");  // hidden

  CompareOptions compare_opts;
  CLI::App* compare = app.add_subcommand("compare", "Compare run output directories");
  compare->add_option("dirs", compare_opts.run_dirs, "Run directories (rms.csv + cost.csv)")
      ->expected(-1)
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) {
    run_opts.seed_given = run->count("--seed") > 0;
    return cmd_run(run_opts);
  }
  if (verify->parsed()) return cmd_verify(verify_opts);
  return cmd_compare(compare_opts);
}
