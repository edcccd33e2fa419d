#include "desense/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "desense/errors.hpp"

namespace desense {

namespace {

using nlohmann::json;

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

Matrix matrix_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigError("key '" + key + "': expected a non-empty nested array");
  if (!j[0].is_array()) throw ConfigError("key '" + key + "': expected rows to be arrays");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j[0].size());
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
      throw ConfigError("key '" + key + "': ragged matrix rows");
    for (int c = 0; c < cols; ++c) {
      if (!j[i][c].is_number()) throw ConfigError("key '" + key + "': non-numeric matrix entry");
      out(i, c) = j[i][c].get<double>();
    }
  }
  return out;
}

Vector vector_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty())
    throw ConfigError("key '" + key + "': expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (int i = 0; i < static_cast<int>(j.size()); ++i) {
    if (!j[i].is_number()) throw ConfigError("key '" + key + "': non-numeric entry");
    out(i) = j[i].get<double>();
  }
  return out;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

WeightingScheme scheme_from_json(const json& j, int state_dim, int param_dim,
                                 const std::string& name) {
  if (!j.contains("type") || !j["type"].is_string())
    throw ConfigError("scheme '" + name + "': missing string key 'type'");
  std::string type = j["type"].get<std::string>();
  if (type == "kf" || type == "conventional") return Conventional{};
  if (type == "adkf") {
    if (!j.contains("w_a")) throw ConfigError("scheme '" + name + "': adkf needs key 'w_a'");
    return Adkf{matrix_from_json(j["w_a"], name + ".w_a")};
  }
  if (type == "ksdkf") {
    if (!j.contains("w")) throw ConfigError("scheme '" + name + "': ksdkf needs key 'w'");
    const json& w = j["w"];
    std::vector<Matrix> w_list;
    if (w.is_array() && !w.empty() && w[0].is_array() && !w[0].empty() && w[0][0].is_array()) {
      for (int i = 0; i < static_cast<int>(w.size()); ++i)
        w_list.push_back(matrix_from_json(w[i], name + ".w[" + std::to_string(i) + "]"));
    } else {
      // A single matrix is shorthand for the same weight on every parameter.
      Matrix shared = matrix_from_json(w, name + ".w");
      w_list.assign(param_dim, shared);
    }
    return Ksdkf{std::move(w_list)};
  }
  (void)state_dim;
  throw ConfigError("scheme '" + name + "': unknown type '" + type +
                    "' (expected kf, adkf or ksdkf)");
}

json scheme_to_json(const SchemeSpec& spec) {
  json out;
  out["name"] = spec.name;
  if (const Adkf* a = std::get_if<Adkf>(&spec.scheme)) {
    out["type"] = "adkf";
    out["w_a"] = matrix_to_json(a->w_a);
  } else if (const Ksdkf* k = std::get_if<Ksdkf>(&spec.scheme)) {
    out["type"] = "ksdkf";
    json w = json::array();
    for (const Matrix& wi : k->w_list) w.push_back(matrix_to_json(wi));
    out["w"] = std::move(w);
  } else {
    out["type"] = "kf";
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_number(const std::string& field, const char* file, int line) {
  try {
    std::size_t used = 0;
    double value = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string(file) + " line " + std::to_string(line) +
                      ": expected a number, got '" + field + "'");
  }
}

int parse_int(const std::string& field, const char* file, int line) {
  try {
    std::size_t used = 0;
    int value = std::stoi(field, &used);
    if (used != field.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string(file) + " line " + std::to_string(line) +
                      ": expected an integer, got '" + field + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string render_rms_csv(const ExperimentReport& report) {
  std::string out = "epoch,scheme,state_index,rms\n";
  int n_epochs = report.rms.empty() ? 0 : static_cast<int>(report.rms[0].rows());
  int n_states = report.rms.empty() ? 0 : static_cast<int>(report.rms[0].cols());
  for (int k = 0; k < n_epochs; ++k) {
    for (int s = 0; s < static_cast<int>(report.scheme_names.size()); ++s) {
      for (int j = 0; j < n_states; ++j) {
        out += std::to_string(k + 1);
        out += ',';
        out += report.scheme_names[s];
        out += ',';
        out += std::to_string(j + 1);
        out += ',';
        out += format_double(report.rms[s](k, j));
        out += '\n';
      }
    }
  }
  return out;
}

std::string render_cost_csv(const ExperimentReport& report) {
  std::string out = "epoch,scheme,mean_cost,mean_penalty\n";
  int n_epochs = report.mean_cost.empty() ? 0 : static_cast<int>(report.mean_cost[0].size());
  for (int k = 0; k < n_epochs; ++k) {
    for (int s = 0; s < static_cast<int>(report.scheme_names.size()); ++s) {
      out += std::to_string(k + 1);
      out += ',';
      out += report.scheme_names[s];
      out += ',';
      out += format_double(report.mean_cost[s](k));
      out += ',';
      out += format_double(report.mean_penalty[s](k));
      out += '\n';
    }
  }
  return out;
}

std::vector<RmsRow> parse_rms_csv(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines[0] != "epoch,scheme,state_index,rms")
    throw ConfigError("rms csv line 1: expected header 'epoch,scheme,state_index,rms'");
  std::vector<RmsRow> rows;
  for (int i = 1; i < static_cast<int>(lines.size()); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 4)
      throw ConfigError("rms csv line " + std::to_string(i + 1) + ": expected 4 fields");
    RmsRow row;
    row.epoch = parse_int(fields[0], "rms csv", i + 1);
    row.scheme = fields[1];
    row.state_index = parse_int(fields[2], "rms csv", i + 1);
    row.rms = parse_number(fields[3], "rms csv", i + 1);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<CostRow> parse_cost_csv(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty() || lines[0] != "epoch,scheme,mean_cost,mean_penalty")
    throw ConfigError("cost csv line 1: expected header 'epoch,scheme,mean_cost,mean_penalty'");
  std::vector<CostRow> rows;
  for (int i = 1; i < static_cast<int>(lines.size()); ++i) {
    if (lines[i].empty()) continue;
    std::vector<std::string> fields = split_fields(lines[i]);
    if (fields.size() != 4)
      throw ConfigError("cost csv line " + std::to_string(i + 1) + ": expected 4 fields");
    CostRow row;
    row.epoch = parse_int(fields[0], "cost csv", i + 1);
    row.scheme = fields[1];
    row.mean_cost = parse_number(fields[2], "cost csv", i + 1);
    row.mean_penalty = parse_number(fields[3], "cost csv", i + 1);
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_of_byte(text, e.byte)) + ": " +
                      e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

  ExperimentConfig cfg;
  bool from_benchmark = false;
  if (!j.contains("model")) throw ConfigError("config: missing key 'model'");
  const json& jm = j["model"];
  if (jm.is_string()) {
    if (jm.get<std::string>() != "benchmark")
      throw ConfigError("config key 'model': unknown preset '" + jm.get<std::string>() + "'");
    BenchmarkSetup setup = make_benchmark();
    cfg.model = setup.model;
    cfg.p_hat = setup.p_hat;
    cfg.x0 = setup.x0;
    cfg.p0_cov = setup.p0_cov;
    cfg.param_ranges = setup.param_ranges;
    from_benchmark = true;
  } else if (jm.is_object()) {
    for (const char* key : {"phi", "h", "q", "r"}) {
      if (!jm.contains(key))
        throw ConfigError(std::string("config key 'model': missing key '") + key + "'");
    }
    Matrix phi0 = matrix_from_json(jm["phi"], "model.phi");
    Matrix h0 = matrix_from_json(jm["h"], "model.h");
    Matrix q = matrix_from_json(jm["q"], "model.q");
    Matrix r = matrix_from_json(jm["r"], "model.r");
    try {
      if (jm.contains("dphi")) {
        std::vector<Matrix> dphi, dh;
        for (int i = 0; i < static_cast<int>(jm["dphi"].size()); ++i)
          dphi.push_back(matrix_from_json(jm["dphi"][i], "model.dphi[" + std::to_string(i) + "]"));
        if (jm.contains("dh")) {
          for (int i = 0; i < static_cast<int>(jm["dh"].size()); ++i)
            dh.push_back(matrix_from_json(jm["dh"][i], "model.dh[" + std::to_string(i) + "]"));
        }
        cfg.model = make_affine_discrete_model(phi0, dphi, h0, dh, q, r);
      } else {
        int param_dim = jm.value("param_dim", 1);
        cfg.model = make_constant_discrete_model(phi0, h0, q, r, param_dim);
      }
    } catch (const FilterError& e) {
      throw ConfigError(std::string("config key 'model': ") + e.what());
    }
  } else {
    throw ConfigError("config key 'model': expected \"benchmark\" or an object");
  }

  if (j.contains("p_hat")) cfg.p_hat = vector_from_json(j["p_hat"], "p_hat");
  if (cfg.p_hat.size() == 0) cfg.p_hat = Vector::Zero(cfg.model.param_dim);
  if (j.contains("x0")) cfg.x0 = vector_from_json(j["x0"], "x0");
  if (j.contains("p0_cov")) cfg.p0_cov = matrix_from_json(j["p0_cov"], "p0_cov");
  if (!from_benchmark && !j.contains("x0")) throw ConfigError("config: missing key 'x0'");
  if (!from_benchmark && !j.contains("p0_cov")) throw ConfigError("config: missing key 'p0_cov'");

  if (j.contains("param_ranges")) {
    const json& jr = j["param_ranges"];
    if (!jr.is_array() || jr.empty())
      throw ConfigError("config key 'param_ranges': expected a non-empty array of [low, high]");
    cfg.param_ranges.clear();
    for (int i = 0; i < static_cast<int>(jr.size()); ++i) {
      if (!jr[i].is_array() || jr[i].size() != 2 || !jr[i][0].is_number() || !jr[i][1].is_number())
        throw ConfigError("config key 'param_ranges': entry " + std::to_string(i) +
                          " must be [low, high]");
      cfg.param_ranges.push_back({jr[i][0].get<double>(), jr[i][1].get<double>()});
    }
  } else if (!from_benchmark) {
    throw ConfigError("config: missing key 'param_ranges'");
  }

  if (j.contains("n_cases")) {
    if (!j["n_cases"].is_number_integer())
      throw ConfigError("config key 'n_cases': expected an integer");
    cfg.n_cases = j["n_cases"].get<int>();
  }
  if (j.contains("n_epochs")) {
    if (!j["n_epochs"].is_number_integer())
      throw ConfigError("config key 'n_epochs': expected an integer");
    cfg.n_epochs = j["n_epochs"].get<int>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ConfigError("config key 'seed': expected an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("init_error_draw")) {
    if (!j["init_error_draw"].is_boolean())
      throw ConfigError("config key 'init_error_draw': expected a boolean");
    cfg.init_error_draw = j["init_error_draw"].get<bool>();
  }
  if (j.contains("reference_w")) cfg.reference_w = matrix_from_json(j["reference_w"], "reference_w");

  if (!j.contains("schemes") || !j["schemes"].is_array() || j["schemes"].empty())
    throw ConfigError("config: key 'schemes' must be a non-empty array");
  for (const json& js : j["schemes"]) {
    if (!js.is_object() || !js.contains("name") || !js["name"].is_string())
      throw ConfigError("config key 'schemes': every scheme needs a string 'name'");
    std::string name = js["name"].get<std::string>();
    cfg.schemes.push_back(
        {name, scheme_from_json(js, cfg.model.state_dim, cfg.model.param_dim, name)});
  }

  try {
    validate_config(cfg);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  // The callable model cannot be echoed; record its nominal evaluation.
  j["model"] = {{"phi_at_p_hat", matrix_to_json(eval_phi(cfg.model, cfg.p_hat))},
                {"h_at_p_hat", matrix_to_json(eval_h(cfg.model, cfg.p_hat))},
                {"q", matrix_to_json(cfg.model.q)},
                {"r", matrix_to_json(cfg.model.r)},
                {"param_dim", cfg.model.param_dim}};
  j["p_hat"] = vector_to_json(cfg.p_hat);
  j["n_cases"] = cfg.n_cases;
  j["n_epochs"] = cfg.n_epochs;
  j["seed"] = cfg.seed;
  j["x0"] = vector_to_json(cfg.x0);
  j["p0_cov"] = matrix_to_json(cfg.p0_cov);
  json ranges = json::array();
  for (const ParamRange& r : cfg.param_ranges) ranges.push_back({r.low, r.high});
  j["param_ranges"] = std::move(ranges);
  json schemes = json::array();
  for (const SchemeSpec& spec : cfg.schemes) schemes.push_back(scheme_to_json(spec));
  j["schemes"] = std::move(schemes);
  j["reference_w"] = matrix_to_json(resolve_reference_weight(cfg));
  j["init_error_draw"] = cfg.init_error_draw;
  return j.dump(2) + "\n";
}

std::string render_manifest_json(const RunManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["duration_seconds"] = manifest.duration_seconds;
  j["n_cases"] = manifest.n_cases;
  j["failed_cases"] = manifest.failed_cases;
  j["schemes"] = manifest.scheme_names;
  j["outputs"] = manifest.output_files;
  try {
    j["config"] = json::parse(manifest.config_json);
  } catch (const json::parse_error&) {
    j["config"] = manifest.config_json;
  }
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace desense
