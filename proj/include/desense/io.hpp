#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "desense/montecarlo.hpp"

namespace desense {

/// Shortest decimal that round-trips a double (printf %.17g).
std::string format_double(double v);

/// Long-format table: epoch,scheme,state_index,rms. Epochs and state indices
/// are 1-based.
std::string render_rms_csv(const ExperimentReport& report);

/// Long-format table: epoch,scheme,mean_cost,mean_penalty.
std::string render_cost_csv(const ExperimentReport& report);

struct RmsRow {
  int epoch;
  std::string scheme;
  int state_index;
  double rms;
};

struct CostRow {
  int epoch;
  std::string scheme;
  double mean_cost;
  double mean_penalty;
};

/// Parsers reject malformed rows with a ConfigError naming the line.
std::vector<RmsRow> parse_rms_csv(const std::string& text);
std::vector<CostRow> parse_cost_csv(const std::string& text);

/// Builds an ExperimentConfig from JSON text. Recognized keys: model (the
/// string "benchmark" or an object with phi/h/q/r and optional dphi/dh
/// matrix lists), p_hat, n_cases, n_epochs, seed, x0, p0_cov, param_ranges,
/// schemes (list of {name, type, w_a | w}), reference_w, init_error_draw.
/// Throws ConfigError with a line-anchored message on syntax errors and a
/// key-anchored message on semantic ones.
ExperimentConfig parse_config_json(const std::string& text);

/// Round-trips the config back to JSON (echoed into the run manifest).
std::string config_to_json(const ExperimentConfig& cfg);

struct RunManifest {
  std::string version;
  std::uint64_t seed = 0;
  double duration_seconds = 0.0;
  int n_cases = 0;
  int failed_cases = 0;
  std::vector<std::string> scheme_names;
  std::string config_json;               // echo of the effective config
  std::vector<std::string> output_files; // every file the run emitted
};

std::string render_manifest_json(const RunManifest& manifest);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace desense
