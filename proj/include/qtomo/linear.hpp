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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/ensembles.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"
#include "qtomo/quantum.hpp"

namespace qtomo {

/// Entrywise measurement-noise model: independent uniform draws from
/// [-epsilon, epsilon] added to each matrix entry.
struct ErrorModel {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// Rows index quench pairs, columns index basis operators; entry (i, a) is
/// <psi_i(0)|O_a|psi_i(0)> - <psi_i(t)|O_a|psi_i(t)>, so the coupling vector
/// of the generating Hamiltonian lies in the kernel.
struct ConstraintMatrix {
  Eigen::MatrixXd entries;
  std::optional<ErrorModel> noise;  // set once error has been injected

  int pairs() const { return static_cast<int>(entries.rows()); }
  int operators() const { return static_cast<int>(entries.cols()); }
};

ConstraintMatrix build_constraint_matrix(
    const OperatorBasis& basis, const std::vector<QuenchPair>& pairs,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Returns a copy with noise added; the input stays clean so one clean
/// matrix can serve several noise realizations.
ConstraintMatrix inject_error(const ConstraintMatrix& clean,
                              const ErrorModel& em);

/// Kernel estimate and spectrum summary of M / sqrt(p).
struct ReconstructionResult {
  Eigen::VectorXd estimate;        // unit norm, deterministic sign
  Eigen::VectorXd singular_values; // of M / sqrt(p), descending
  double gap = 0.0;                // s2 - s1 over the two smallest
  bool ambiguous_kernel = false;   // two smallest singular values collide

  // Filled by score_against when a ground truth is available.
  double fidelity = std::numeric_limits<double>::quiet_NaN();
  double error = std::numeric_limits<double>::quiet_NaN();
  double angle = std::numeric_limits<double>::quiet_NaN();
};

/// Homogeneous least squares: right singular vector of the smallest
/// singular value of M.
ReconstructionResult solve_kernel(const ConstraintMatrix& m);

struct Score {
  double fidelity;  // |cos(angle)|
  double error;     // |sin(angle)|
  double angle;
};

/// Angle-based agreement between two coupling directions; sign and scale
/// insensitive.
Score score(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

void score_against(ReconstructionResult& result, const Eigen::VectorXd& truth);

/// s2 - s1 over the two smallest singular values of M / sqrt(p).
double singular_gap(const ConstraintMatrix& m);

/// Reconstruction-error bound sqrt(n/p) * epsilon / gap next to the measured
/// mean error of a realization batch.
struct ErrorBoundReport {
  bool applicable = false;  // epsilon < gap, the bound's validity regime
  double bound = 0.0;
  double measured = 0.0;
  double ratio = 0.0;  // measured / bound (0 when bound is 0)
};

ErrorBoundReport error_bound_report(double mean_error, double gap,
                                    const ErrorModel& em, int operators,
                                    int pairs);

/// Least-squares slope of log(error) against log(pairs); the noise-dominated
/// tail should scale like p^(-1/2).
double log_log_slope(const std::vector<std::pair<double, double>>& points);

/// Ansatz split for robustness runs: reconstruction uses `kept` while the
/// dynamics is generated by kept + extra.
struct AnsatzSplit {
  HamiltonianSpec kept;
  HamiltonianSpec extra;
};

struct RobustnessRecord {
  double error = 0.0;            // measured E of the kept-ansatz estimate
  double bound = 0.0;            // ||M'/sqrt(p)|| ||c'|| / (s2 ||c||)
  double s2 = 0.0;               // second-smallest singular value of M/sqrt(p)
  double extra_norm = 0.0;       // ||M'/sqrt(p)|| operator norm
  double total_gap = 0.0;        // gap of the concatenated [M M']/sqrt(p)
  bool within_bound = false;
};

/// Reconstructs with the kept basis from pairs whose dynamics was generated
/// by kept + extra, and reports the perturbative bound diagnostics. The
/// pairs must have been evolved under the combined Hamiltonian.
RobustnessRecord robustness_experiment(
    const AnsatzSplit& split, const std::vector<QuenchPair>& pairs,
    const std::optional<ErrorModel>& em = {},
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Baseline protocol: rows from consecutive time slices
/// (psi(k dt), psi((k+1) dt)) of a single trajectory.
ConstraintMatrix time_slice_baseline(
    const OperatorBasis& basis, const EigenSystem& eig,
    const StateVector& initial, double dt, int pairs,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// CSV with a header row of operator names, one row per pair; 12 significant
/// digits.
void write_constraint_csv(const ConstraintMatrix& m, const OperatorBasis& basis,
                          const std::string& path);

}  // namespace qtomo
