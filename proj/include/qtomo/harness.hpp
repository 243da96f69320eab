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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "qtomo/ensembles.hpp"
#include "qtomo/linear.hpp"
#include "qtomo/numerics.hpp"

namespace qtomo {

enum class Protocol {
  multi_quench,   // independent quench pairs, kernel reconstruction
  time_slice,     // consecutive slices of one trajectory (baseline)
  single_quench,  // moment tensors from one pair, multi-start solve
  robustness,     // kept-ansatz reconstruction under enlarged dynamics
  gap_sweep,      // singular gap of the clean constraint matrix
  spectrum        // eigenvalue histogram of the sampled covariance
};

const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

/// One experiment: a model family, an initial-state ensemble, and explicit
/// sweep lists. Every (time, pairs, epsilon) combination is one sweep point
/// averaged over `realizations` model instances.
///
/// Seeding: couplings for realization r come from
/// derive_seed(model.coupling_seed, couplings-stream, r) so each realization
/// keeps its Hamiltonian across sweep points; states are drawn from a
/// realization-scoped stream indexed by pair number so a longer pair list
/// extends a shorter one; noise is keyed by (master_seed, sweep point, r) so
/// adding sweep points never perturbs existing ones.
struct ExperimentConfig {
  ModelSpec model;
  EnsembleKind ensemble = EnsembleKind::bloch_product;
  Protocol protocol = Protocol::multi_quench;

  std::vector<double> times{1.0};
  std::vector<int> pair_counts{1};
  std::vector<double> epsilons{0.0};
  int realizations = 1;
  std::uint64_t master_seed = 0;

  std::string output_path;     // empty writes to stdout
  std::string format = "csv";  // "csv" or "json"

  // Protocol-specific knobs (ignored by protocols that do not use them).
  std::vector<int> orders{1, 2, 3};  // single_quench tensor orders
  int starts = 500;                  // single_quench multi-start count
  double extra_ratio = 0.05;         // robustness ||c'|| / ||c||
  int bins = 50;                     // spectrum histogram bins
  double histogram_lo = 0.0;
  double histogram_hi = 0.5;

  bool operator==(const ExperimentConfig&) const = default;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string to_json_text() const;
};

/// Template config with per-field commentary; parses back via
/// from_json_text, which strips comments.
std::string config_template();

/// Aggregated sweep-point outcome. `values` holds the protocol's named
/// aggregate columns in a fixed order shared by all rows of a run.
struct ResultRow {
  double time = 0.0;
  int pairs = 0;
  double epsilon = 0.0;
  int realizations = 0;
  std::vector<std::pair<std::string, double>> values;
};

struct RunOutput {
  std::vector<ResultRow> rows;
  double elapsed_seconds = 0.0;
};

/// Runs every sweep point; realizations are distributed over `workers`
/// threads with per-index result slots, so any worker count yields
/// identical rows.
RunOutput run_experiment(const ExperimentConfig& config, int workers = 1,
                         const NumericsPolicy& policy = NumericsPolicy::standard());

/// Renders rows in the configured format: a header comment carrying version
/// and config, a timestamp/elapsed line (the only unstable content), then
/// the data with 12 significant digits.
std::string render_rows(const ExperimentConfig& config, const RunOutput& out,
                        const std::string& format);

/// Writes render_rows output to config.output_path (or the override);
/// returns the path written, empty for stdout.
std::string emit_rows(const ExperimentConfig& config, const RunOutput& out,
                      const std::string& path_override = "",
                      const std::string& format_override = "");

/// Reads an externally produced constraint-matrix CSV, reorders columns to
/// the basis order by header name, and validates entries; errors carry
/// row/column coordinates.
ConstraintMatrix ingest_external(const std::string& csv_path,
                                 const OperatorBasis& basis);

/// Headless self-check battery used by the `verify` subcommand; prints one
/// line per property and returns the failure count.
int run_verify_battery(std::ostream& log);

}  // namespace qtomo
