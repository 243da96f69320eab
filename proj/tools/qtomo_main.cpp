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

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtomo/ensembles.hpp"
#include "qtomo/harness.hpp"
#include "qtomo/linear.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"

namespace {

// Data goes to stdout when no path is given; status lines always go to
// stderr so piped output stays machine readable.
void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw qtomo::ValidationError("cannot open output file: " + path);
  out << text;
  if (!out.flush())
    throw qtomo::ValidationError("cannot write output file: " + path);
}

std::string require_format(const std::string& format) {
  if (format != "csv" && format != "json")
    throw qtomo::ValidationError("format must be csv or json, got '" + format +
                                 "'");
  return format;
}

int do_run(const std::string& config_path, const std::string& output_override,
           const std::string& format_override, int workers, bool seed_set,
           std::uint64_t seed) {
  qtomo::ExperimentConfig config = qtomo::ExperimentConfig::load(config_path);
  if (seed_set) config.master_seed = seed;
  if (!format_override.empty()) require_format(format_override);
  const qtomo::RunOutput out = qtomo::run_experiment(config, workers);
  const std::string path =
      qtomo::emit_rows(config, out, output_override, format_override);
  char elapsed[64];
  std::snprintf(elapsed, sizeof(elapsed), "%.2f", out.elapsed_seconds);
  std::cerr << "qtomo run: " << out.rows.size() << " sweep points, "
            << config.realizations << " realizations each, " << elapsed
            << "s -> " << (path.empty() ? std::string("stdout") : path)
            << '\n';
  return 0;
}

// Reconstruction report for an externally measured constraint matrix: the
// kernel-direction estimate named per basis operator plus the spectrum
// diagnostics that qualify it.
std::string ingest_report(const qtomo::ExperimentConfig& config,
                          const std::string& csv_path,
                          const std::string& format) {
  const qtomo::OperatorBasis basis = qtomo::model_basis(config.model);
  const qtomo::ConstraintMatrix matrix =
      qtomo::ingest_external(csv_path, basis);
  qtomo::ReconstructionResult result = qtomo::solve_kernel(matrix);
  const std::vector<std::string> names = basis.names();

  if (format == "json") {
    nlohmann::json doc;
    doc["version"] = QTOMO_VERSION;
    doc["source"] = csv_path;
    doc["pairs"] = matrix.pairs();
    doc["operators"] = names;
    doc["estimate"] = std::vector<double>(
        result.estimate.data(), result.estimate.data() + result.estimate.size());
    doc["singular_values"] = std::vector<double>(
        result.singular_values.data(),
        result.singular_values.data() + result.singular_values.size());
    doc["gap"] = result.gap;
    doc["ambiguous_kernel"] = result.ambiguous_kernel;
    return doc.dump(2) + "\n";
  }

  std::string text = "# qtomo " QTOMO_VERSION " ingest\n";
  char line[160];
  std::snprintf(line, sizeof(line), "# source %s pairs %d\n", csv_path.c_str(),
                matrix.pairs());
  text += line;
  std::snprintf(line, sizeof(line), "# gap %.12g ambiguous %d\n", result.gap,
                result.ambiguous_kernel ? 1 : 0);
  text += line;
  text += "operator,coefficient\n";
  for (int a = 0; a < static_cast<int>(names.size()); ++a) {
    std::snprintf(line, sizeof(line), "%s,%.12g\n", names[a].c_str(),
                  result.estimate[a]);
    text += line;
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulate quantum quenches and reconstruct the couplings of "
               "the generating Hamiltonian"};
  app.set_version_flag("--version", std::string(QTOMO_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string output_path;
  std::string format;
  std::string input_path;
  int workers = 1;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand(
      "run", "run the sweep described by a config file and emit result rows");
  run->add_option("--config", config_path,
                  "experiment config, json with // comments allowed")
      ->required();
  run->add_option("--output", output_path,
                  "output path override (default: the config's output_path; "
                  "empty writes to stdout)");
  run->add_option("--workers", workers,
                  "parallel workers for realizations; any count yields "
                  "identical rows");
  CLI::Option* seed_option =
      run->add_option("--seed", seed, "master seed override");
  run->add_option("--format", format, "output format override: csv or json");

  app.add_subcommand("verify",
                     "run the headless self-check battery; exits 1 when any "
                     "property fails");

  CLI::App* ingest = app.add_subcommand(
      "ingest",
      "reconstruct couplings from an externally measured constraint CSV");
  ingest->add_option("csv", input_path,
                     "constraint matrix CSV with a header of operator names")
      ->required();
  ingest->add_option("--config", config_path,
                     "config whose model fixes the operator basis")
      ->required();
  ingest->add_option("--output", output_path,
                     "report path (default: stdout)");
  ingest->add_option("--format", format, "report format: csv or json");

  CLI::App* tmpl = app.add_subcommand(
      "emit-config-template", "print a commented, runnable config template");
  tmpl->add_option("--output", output_path,
                   "template path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad usage is a validation error
  }

  try {
    if (run->parsed())
      return do_run(config_path, output_path, format, workers,
                    seed_option->count() > 0, seed);
    if (app.get_subcommand("verify")->parsed())
      return qtomo::run_verify_battery(std::cout) == 0 ? 0 : 1;
    if (ingest->parsed()) {
      const qtomo::ExperimentConfig config =
          qtomo::ExperimentConfig::load(config_path);
      const std::string fmt = format.empty() ? "csv" : require_format(format);
      write_text(output_path, ingest_report(config, input_path, fmt));
      return 0;
    }
    if (tmpl->parsed()) {
      write_text(output_path, qtomo::config_template());
      return 0;
    }
  } catch (const qtomo::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const qtomo::CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;  // unreachable: require_subcommand guarantees one branch
}
