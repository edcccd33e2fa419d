#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "desense/errors.hpp"
#include "desense/filter_continuous.hpp"
#include "desense/filter_discrete.hpp"
#include "desense/io.hpp"
#include "desense/model.hpp"
#include "desense/montecarlo.hpp"
#include "desense/selfcheck.hpp"
#include "desense/sensitivity_oracle.hpp"
#include "desense/version.hpp"

namespace py = pybind11;
using namespace desense;

// Models are built through the C++ factories rather than Python callables so
// experiment workers never have to re-enter the interpreter.
PYBIND11_MODULE(_core, m) {
  m.doc() = "Desensitized Kalman filtering: conventional, stacked-penalty and "
            "per-parameter-penalty gains, plus the Monte-Carlo benchmark harness";
  m.attr("__version__") = kVersion;

  py::register_exception<FilterError>(m, "FilterError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ExperimentError>(m, "ExperimentError");

  py::class_<ParametricDiscreteModel>(m, "DiscreteModel")
      .def_readonly("state_dim", &ParametricDiscreteModel::state_dim)
      .def_readonly("meas_dim", &ParametricDiscreteModel::meas_dim)
      .def_readonly("param_dim", &ParametricDiscreteModel::param_dim)
      .def_readonly("q", &ParametricDiscreteModel::q)
      .def_readonly("r", &ParametricDiscreteModel::r)
      .def("phi", [](const ParametricDiscreteModel& mdl, const ParameterVector& p) {
        return eval_phi(mdl, p);
      })
      .def("h", [](const ParametricDiscreteModel& mdl, const ParameterVector& p) {
        return eval_h(mdl, p);
      });

  py::class_<ParametricContinuousModel>(m, "ContinuousModel")
      .def_readonly("state_dim", &ParametricContinuousModel::state_dim)
      .def_readonly("meas_dim", &ParametricContinuousModel::meas_dim)
      .def_readonly("param_dim", &ParametricContinuousModel::param_dim)
      .def_readonly("q", &ParametricContinuousModel::q)
      .def_readonly("r", &ParametricContinuousModel::r);

  py::class_<ParamRange>(m, "ParamRange")
      .def(py::init([](double low, double high) { return ParamRange{low, high}; }),
           py::arg("low"), py::arg("high"))
      .def_readwrite("low", &ParamRange::low)
      .def_readwrite("high", &ParamRange::high);

  py::class_<BenchmarkSetup>(m, "BenchmarkSetup")
      .def_readonly("model", &BenchmarkSetup::model)
      .def_readonly("p_hat", &BenchmarkSetup::p_hat)
      .def_readonly("x0", &BenchmarkSetup::x0)
      .def_readonly("p0_cov", &BenchmarkSetup::p0_cov)
      .def_readonly("param_ranges", &BenchmarkSetup::param_ranges)
      .def_readonly("w_a_reference", &BenchmarkSetup::w_a_reference);

  m.def("make_benchmark", &make_benchmark);
  m.def("make_constant_discrete_model", &make_constant_discrete_model, py::arg("phi0"),
        py::arg("h0"), py::arg("q"), py::arg("r"), py::arg("param_dim") = 1);
  m.def("make_affine_discrete_model", &make_affine_discrete_model, py::arg("phi0"),
        py::arg("dphi"), py::arg("h0"), py::arg("dh"), py::arg("q"), py::arg("r"));
  m.def("make_constant_continuous_model", &make_constant_continuous_model, py::arg("phi0"),
        py::arg("h0"), py::arg("q"), py::arg("r"), py::arg("param_dim") = 1);
  m.def("make_affine_continuous_model", &make_affine_continuous_model, py::arg("phi0"),
        py::arg("dphi"), py::arg("h0"), py::arg("dh"), py::arg("q"), py::arg("r"));
  m.def("load_discrete_model_json", &load_discrete_model_json, py::arg("json_text"));

  py::class_<FilterState>(m, "FilterState")
      .def_readwrite("xhat", &FilterState::xhat)
      .def_readwrite("p_cov", &FilterState::p_cov)
      .def_readwrite("s", &FilterState::s)
      .def_readwrite("epoch", &FilterState::epoch);

  py::class_<Conventional>(m, "Conventional").def(py::init<>());
  py::class_<Adkf>(m, "Adkf")
      .def(py::init([](const Matrix& w_a) { return Adkf{w_a}; }), py::arg("w_a"))
      .def_readwrite("w_a", &Adkf::w_a);
  py::class_<Ksdkf>(m, "Ksdkf")
      .def(py::init([](const std::vector<Matrix>& w) { return Ksdkf{w}; }), py::arg("w"))
      .def_readwrite("w_list", &Ksdkf::w_list);

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("gain", &StepRecord::gain)
      .def_readonly("innovation", &StepRecord::innovation)
      .def_readonly("gamma", &StepRecord::gamma)
      .def_readonly("cost_total", &StepRecord::cost_total)
      .def_readonly("cost_penalty", &StepRecord::cost_penalty)
      .def_readonly("trace_p", &StepRecord::trace_p);

  m.def("make_initial_state", &make_initial_state, py::arg("x0"), py::arg("p0"),
        py::arg("param_dim"));
  m.def("time_update", &time_update, py::arg("state"), py::arg("model"), py::arg("p_hat"));
  m.def("innovation_matrix", &innovation_matrix, py::arg("prior"), py::arg("model"),
        py::arg("p_hat"));
  m.def("gain_kf", &gain_kf, py::arg("prior"), py::arg("model"), py::arg("p_hat"));
  m.def("gain_adkf", &gain_adkf, py::arg("prior"), py::arg("gamma"), py::arg("w_a"),
        py::arg("model"), py::arg("p_hat"));
  m.def("gain_ksdkf", &gain_ksdkf, py::arg("prior"), py::arg("gamma"), py::arg("w_list"),
        py::arg("model"), py::arg("p_hat"));
  m.def("measurement_update", &measurement_update, py::arg("prior"), py::arg("gain"), py::arg("z"),
        py::arg("model"), py::arg("p_hat"), py::arg("scheme"));
  m.def("step", &step, py::arg("state"), py::arg("z"), py::arg("model"), py::arg("p_hat"),
        py::arg("scheme"));
  m.def("cost_adkf", &cost_adkf, py::arg("posterior"), py::arg("w_a"));
  m.def("cost_ksdkf", &cost_ksdkf, py::arg("posterior"), py::arg("w_list"));

  py::class_<ContinuousFilterState>(m, "ContinuousFilterState")
      .def_readwrite("t", &ContinuousFilterState::t)
      .def_readwrite("xhat", &ContinuousFilterState::xhat)
      .def_readwrite("p_cov", &ContinuousFilterState::p_cov)
      .def_readwrite("s", &ContinuousFilterState::s);

  py::class_<IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init([](double dt) { return IntegratorConfig{dt}; }), py::arg("dt") = 0.01)
      .def_readwrite("dt", &IntegratorConfig::dt);

  m.def("make_initial_continuous_state", &make_initial_continuous_state, py::arg("x0"),
        py::arg("p0"), py::arg("param_dim"), py::arg("t0") = 0.0);
  m.def("continuous_gain_adkf", &continuous_gain_adkf, py::arg("p_cov"), py::arg("s"),
        py::arg("gamma"), py::arg("w_a"), py::arg("h_bar"), py::arg("r"));
  m.def("continuous_gain_ksdkf", &continuous_gain_ksdkf, py::arg("p_cov"), py::arg("s"),
        py::arg("gamma"), py::arg("w_list"), py::arg("h_bar"), py::arg("r"));
  m.def("integrate_step", &integrate_step, py::arg("state"), py::arg("z"), py::arg("model"),
        py::arg("p_hat"), py::arg("scheme"), py::arg("cfg"));

  m.def("replay_frozen_gains", &replay_frozen_gains, py::arg("model"), py::arg("p"), py::arg("x0"),
        py::arg("gains"), py::arg("measurements"));
  m.def("fd_sensitivity", &fd_sensitivity, py::arg("model"), py::arg("p_hat"), py::arg("x0"),
        py::arg("gains"), py::arg("measurements"), py::arg("delta") = 1e-6);

  py::class_<SchemeSpec>(m, "SchemeSpec")
      .def(py::init([](const std::string& name, const WeightingScheme& scheme) {
             return SchemeSpec{name, scheme};
           }),
           py::arg("name"), py::arg("scheme"))
      .def_readwrite("name", &SchemeSpec::name)
      .def_readwrite("scheme", &SchemeSpec::scheme);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("model", &ExperimentConfig::model)
      .def_readwrite("p_hat", &ExperimentConfig::p_hat)
      .def_readwrite("n_cases", &ExperimentConfig::n_cases)
      .def_readwrite("n_epochs", &ExperimentConfig::n_epochs)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("x0", &ExperimentConfig::x0)
      .def_readwrite("p0_cov", &ExperimentConfig::p0_cov)
      .def_readwrite("param_ranges", &ExperimentConfig::param_ranges)
      .def_readwrite("schemes", &ExperimentConfig::schemes)
      .def_readwrite("reference_w", &ExperimentConfig::reference_w)
      .def_readwrite("init_error_draw", &ExperimentConfig::init_error_draw);

  py::class_<ExperimentReport>(m, "ExperimentReport")
      .def_readonly("scheme_names", &ExperimentReport::scheme_names)
      .def_readonly("rms", &ExperimentReport::rms)
      .def_readonly("mean_cost", &ExperimentReport::mean_cost)
      .def_readonly("mean_penalty", &ExperimentReport::mean_penalty)
      .def_readonly("mean_trace_p", &ExperimentReport::mean_trace_p)
      .def_readonly("n_cases", &ExperimentReport::n_cases)
      .def_readonly("failed_cases", &ExperimentReport::failed_cases)
      .def_readonly("failed_case_indices", &ExperimentReport::failed_case_indices)
      .def_readonly("max_cov_asymmetry", &ExperimentReport::max_cov_asymmetry)
      .def_readonly("min_cov_eig_ratio", &ExperimentReport::min_cov_eig_ratio)
      .def_readonly("noise_digest", &ExperimentReport::noise_digest);

  m.def("make_benchmark_experiment", &make_benchmark_experiment, py::arg("seed"));
  m.def("run_experiment", &run_experiment, py::arg("config"), py::arg("n_jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  m.def("parse_config_json", &parse_config_json, py::arg("text"));
  m.def("config_to_json", &config_to_json, py::arg("config"));
  m.def("render_rms_csv", &render_rms_csv, py::arg("report"));
  m.def("render_cost_csv", &render_cost_csv, py::arg("report"));

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("name", &CheckResult::name)
      .def_readonly("pass_", &CheckResult::pass)
      .def_readonly("margin", &CheckResult::margin)
      .def_readonly("threshold", &CheckResult::threshold)
      .def_readonly("detail", &CheckResult::detail);
  m.def("run_self_checks", &run_self_checks, py::arg("gain_perturbation") = 0.0);
}
