// Copyright 2026 The qtomo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "qtomo/ensembles.hpp"
#include "qtomo/harness.hpp"
#include "qtomo/linear.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"

namespace py = pybind11;

namespace {

py::dict row_to_dict(const qtomo::ResultRow& row) {
  py::dict values;
  for (const auto& [name, value] : row.values) values[name.c_str()] = value;
  py::dict out;
  out["time"] = row.time;
  out["pairs"] = row.pairs;
  out["epsilon"] = row.epsilon;
  out["realizations"] = row.realizations;
  out["values"] = values;
  return out;
}

}  // namespace

PYBIND11_MODULE(_qtomo, m) {
  m.doc() =
      "Hamiltonian reconstruction from quantum quench data: simulator, "
      "kernel estimator, and sweep harness";
  m.attr("__version__") = QTOMO_VERSION;

  py::register_exception<qtomo::ValidationError>(m, "QtomoValidationError",
                                                 PyExc_ValueError);
  py::register_exception<qtomo::CapacityError>(m, "QtomoCapacityError",
                                               PyExc_RuntimeError);

  py::enum_<qtomo::ModelFamily>(m, "ModelFamily")
      .value("tfim_yy", qtomo::ModelFamily::tfim_yy)
      .value("ising_lt", qtomo::ModelFamily::ising_lt)
      .value("heisenberg", qtomo::ModelFamily::heisenberg)
      .value("random_tfim", qtomo::ModelFamily::random_tfim)
      .value("random_local", qtomo::ModelFamily::random_local);

  py::enum_<qtomo::Boundary>(m, "Boundary")
      .value("open", qtomo::Boundary::open)
      .value("periodic", qtomo::Boundary::periodic);

  py::enum_<qtomo::EnsembleKind>(m, "EnsembleKind")
      .value("bloch_product", qtomo::EnsembleKind::bloch_product)
      .value("xyz_product", qtomo::EnsembleKind::xyz_product)
      .value("haar", qtomo::EnsembleKind::haar);

  py::enum_<qtomo::Protocol>(m, "Protocol")
      .value("multi_quench", qtomo::Protocol::multi_quench)
      .value("time_slice", qtomo::Protocol::time_slice)
      .value("single_quench", qtomo::Protocol::single_quench)
      .value("robustness", qtomo::Protocol::robustness)
      .value("gap_sweep", qtomo::Protocol::gap_sweep)
      .value("spectrum", qtomo::Protocol::spectrum);

  py::class_<qtomo::CouplingRange>(m, "CouplingRange")
      .def(py::init<>())
      .def_readwrite("lo", &qtomo::CouplingRange::lo)
      .def_readwrite("hi", &qtomo::CouplingRange::hi);

  py::class_<qtomo::ModelSpec>(m, "ModelSpec")
      .def(py::init<>())
      .def_readwrite("family", &qtomo::ModelSpec::family)
      .def_readwrite("site_count", &qtomo::ModelSpec::site_count)
      .def_readwrite("boundary", &qtomo::ModelSpec::boundary)
      .def_readwrite("coupling_seed", &qtomo::ModelSpec::coupling_seed)
      .def_readwrite("range", &qtomo::ModelSpec::range);

  py::class_<qtomo::ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("model", &qtomo::ExperimentConfig::model)
      .def_readwrite("ensemble", &qtomo::ExperimentConfig::ensemble)
      .def_readwrite("protocol", &qtomo::ExperimentConfig::protocol)
      .def_readwrite("times", &qtomo::ExperimentConfig::times)
      .def_readwrite("pair_counts", &qtomo::ExperimentConfig::pair_counts)
      .def_readwrite("epsilons", &qtomo::ExperimentConfig::epsilons)
      .def_readwrite("realizations", &qtomo::ExperimentConfig::realizations)
      .def_readwrite("master_seed", &qtomo::ExperimentConfig::master_seed)
      .def_readwrite("output_path", &qtomo::ExperimentConfig::output_path)
      .def_readwrite("format", &qtomo::ExperimentConfig::format)
      .def_readwrite("orders", &qtomo::ExperimentConfig::orders)
      .def_readwrite("starts", &qtomo::ExperimentConfig::starts)
      .def_readwrite("extra_ratio", &qtomo::ExperimentConfig::extra_ratio)
      .def_readwrite("bins", &qtomo::ExperimentConfig::bins)
      .def_readwrite("histogram_lo", &qtomo::ExperimentConfig::histogram_lo)
      .def_readwrite("histogram_hi", &qtomo::ExperimentConfig::histogram_hi)
      .def_static("from_json_text", &qtomo::ExperimentConfig::from_json_text,
                  py::arg("text"))
      .def_static("load", &qtomo::ExperimentConfig::load, py::arg("path"))
      .def("to_json_text", &qtomo::ExperimentConfig::to_json_text);

  py::class_<qtomo::RunOutput>(m, "RunOutput")
      .def_readonly("elapsed_seconds", &qtomo::RunOutput::elapsed_seconds)
      .def_property_readonly("rows", [](const qtomo::RunOutput& out) {
        py::list rows;
        for (const qtomo::ResultRow& row : out.rows)
          rows.append(row_to_dict(row));
        return rows;
      });

  m.def("config_template", &qtomo::config_template,
        "Commented, runnable experiment config template");

  m.def(
      "run_experiment",
      [](const qtomo::ExperimentConfig& config, int workers) {
        return qtomo::run_experiment(config, workers);
      },
      py::arg("config"), py::arg("workers") = 1,
      py::call_guard<py::gil_scoped_release>(),
      "Run every sweep point of the config; identical rows for any worker "
      "count");

  m.def("render_rows", &qtomo::render_rows, py::arg("config"), py::arg("out"),
        py::arg("format"), "Render run output as csv or json text");

  m.def("emit_rows", &qtomo::emit_rows, py::arg("config"), py::arg("out"),
        py::arg("path_override") = "", py::arg("format_override") = "",
        "Write rendered rows to the configured path; returns the path");

  m.def(
      "basis_names",
      [](const qtomo::ModelSpec& model) {
        return qtomo::model_basis(model).names();
      },
      py::arg("model"), "Operator names of the model's deterministic basis");

  m.def(
      "family_couplings",
      [](const qtomo::ModelSpec& model) -> Eigen::VectorXd {
        return qtomo::family_couplings(model);
      },
      py::arg("model"),
      "Couplings drawn for the model, one per independent coupling");

  m.def(
      "solve_kernel",
      [](const Eigen::MatrixXd& entries) {
        qtomo::ConstraintMatrix matrix;
        matrix.entries = entries;
        const qtomo::ReconstructionResult result = qtomo::solve_kernel(matrix);
        py::dict out;
        out["estimate"] = Eigen::VectorXd(result.estimate);
        out["singular_values"] = Eigen::VectorXd(result.singular_values);
        out["gap"] = result.gap;
        out["ambiguous_kernel"] = result.ambiguous_kernel;
        return out;
      },
      py::arg("matrix"),
      "Homogeneous least-squares kernel estimate of a constraint matrix");

  m.def(
      "score",
      [](const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
        const qtomo::Score s = qtomo::score(estimate, truth);
        py::dict out;
        out["fidelity"] = s.fidelity;
        out["error"] = s.error;
        out["angle"] = s.angle;
        return out;
      },
      py::arg("estimate"), py::arg("truth"),
      "Sign- and scale-insensitive agreement between coupling directions");

  m.def(
      "ingest_matrix",
      [](const std::string& csv_path,
         const qtomo::ModelSpec& model) -> Eigen::MatrixXd {
        return qtomo::ingest_external(csv_path, qtomo::model_basis(model))
            .entries;
      },
      py::arg("csv_path"), py::arg("model"),
      "Read an external constraint CSV, columns reordered to the model "
      "basis");

  m.def(
      "verify",
      []() {
        std::ostringstream log;
        const int failures = qtomo::run_verify_battery(log);
        return py::make_tuple(failures, log.str());
      },
      "Run the self-check battery; returns (failure_count, log_text)");
}
