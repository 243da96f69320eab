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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/ensembles.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"
#include "qtomo/quantum.hpp"

namespace qtomo {

/// Observables the moment tensors range over: each entry is a sum of Pauli
/// strings with unit weights (a singleton for a plain basis, a translate
/// group for the grouped protocol).
struct ObservableSet {
  std::vector<std::vector<PauliString>> ops;
  int site_count = 0;

  static ObservableSet from_basis(const OperatorBasis& basis);
  static ObservableSet from_groups(const GroupedBasis& grouped);

  int size() const { return static_cast<int>(ops.size()); }
};

/// Symmetric real tensor of shape n^order, stored flat and symmetrized over
/// index permutations. Entry (a1..am) of the raw tensor is
/// <psi(0)| O_a1 ... O_am |psi(0)> - <psi(t)| O_a1 ... O_am |psi(t)>.
struct MomentTensor {
  int order = 0;
  int basis_size = 0;
  std::vector<double> coefficients;  // flat, size basis_size^order

  /// Full contraction against x^(tensor order).
  double contract(const Eigen::VectorXd& x) const;

  /// Gradient of the contraction: order * (tensor contracted order-1 times).
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  static std::size_t flat_size(int basis_size, int order,
                               const NumericsPolicy& policy);
};

MomentTensor build_moment_tensor(
    int order, const ObservableSet& obs, const QuenchPair& pair,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Short-time linearization: entries i*t*<psi|[O_a1 ... O_am, H]|psi>,
/// symmetrized; the t-derivative of the finite-time tensor at t = 0 times t,
/// so (finite(dt) - linearized(dt)) = O(dt^2) entrywise.
MomentTensor linearized_tensor(
    int order, const ObservableSet& obs, const Eigen::MatrixXcd& hamiltonian,
    const StateVector& state, double time,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Stacked residuals (one per tensor) at x.
Eigen::VectorXd residuals(const Eigen::VectorXd& x,
                          const std::vector<MomentTensor>& tensors);

struct SolveOptions {
  int starts = 500;
  int max_iterations = 250;
  double tol = 1e-8;               // converged when ||residual|| < tol
  double cluster_angle_deg = 5.0;  // angular clustering radius
  double truth_angle_deg = 5.0;    // matches_truth radius
  std::uint64_t seed = 0;
};

/// Distinct solution direction found by the multi-start solver; sign folded
/// (x and -x belong to one cluster).
struct SolutionCluster {
  Eigen::VectorXd representative;  // unit norm, member with smallest residual
  int multiplicity = 0;            // converged starts in the cluster
  double max_residual = 0.0;
  bool matches_truth = false;
};

struct SolveDiagnostics {
  int total_starts = 0;
  int converged_starts = 0;
};

/// Damped Gauss-Newton from many random starts on the unit sphere, clustered
/// by angular distance and sorted by multiplicity (descending). Empty result
/// means no start converged; see the diagnostics.
std::vector<SolutionCluster> solve_system(
    const std::vector<MomentTensor>& tensors, const SolveOptions& options = {},
    const Eigen::VectorXd* truth = nullptr, SolveDiagnostics* diag = nullptr);

struct GenericityOptions {
  double refine_tol = 1e-11;       // residual required after re-polish
  int refine_iterations = 400;
  double distinct_rel_tol = 1e-2;  // eigenvalue spacing, relative to max |E|
  int min_distinct = 0;            // 0 derives observable count + 1
  double cluster_angle_deg = 5.0;  // merge radius for re-polished survivors
  double truth_angle_deg = 5.0;    // matches_truth radius
};

/// Filters solution clusters down to spectrally generic candidates. A
/// direction supported on mutually anticommuting basis strings (or a
/// commuting sum of such blocks) squares to a polynomial of few projectors,
/// so its operator has very few distinct eigenvalues and every moment
/// constraint on it collapses to low order; the polynomial system then
/// accepts one such direction per block structure regardless of the data.
/// Each representative is re-polished to refine_tol (dropped if it cannot
/// reach it), kept only if its operator has at least min_distinct distinct
/// eigenvalues, and survivors are re-clustered and re-sorted. A candidate
/// with d distinct eigenvalues satisfies at most d - 1 independent moment
/// constraints, hence the d >= n + 1 default.
std::vector<SolutionCluster> generic_clusters(
    const std::vector<SolutionCluster>& clusters,
    const std::vector<MomentTensor>& tensors, const ObservableSet& obs,
    const GenericityOptions& options = {},
    const Eigen::VectorXd* truth = nullptr);

/// Checks that the moment sequence closes: with moments 1..D-1 matched by
/// construction, orders D, D+1, D+2 must be conserved too (relative
/// tolerance from the policy). Rejects pairs whose final state was not
/// produced by evolution under `hamiltonian`.
bool moment_closure_check(
    const Eigen::MatrixXcd& hamiltonian, const QuenchPair& pair,
    const NumericsPolicy& policy = NumericsPolicy::standard(),
    double* max_relative_deviation = nullptr);

struct ScaleOptions {
  double support_floor = 1e-6;    // minimum |<E_i|psi(0)>| for usable levels
  double degeneracy_floor = 1e-9; // minimum usable level spacing
  double overlap_tol = 1e-9;      // validation: 1 - |<reconstructed|actual>|
  int max_winding = 0;            // 0 = derive from spectrum spread and time
  double max_scale = 16.0;        // assumed |scale| ceiling for the search
};

struct ScaleRecovery {
  bool ok = false;
  double scale = 0.0;                    // positive magnitude
  Eigen::VectorXd oriented_direction;    // +-direction so that scale > 0
  std::string diagnostic;                // failure reason when !ok
};

/// Recovers the multiplicative factor s with H = s * sum_a direction_a O_a
/// from one quench pair with known evolution time. The winding-number
/// ambiguity of the eigenphases is resolved by bounded integer search,
/// validated against the full final state.
ScaleRecovery recover_scale(
    const Eigen::VectorXd& direction, const OperatorBasis& basis,
    const QuenchPair& pair, const ScaleOptions& options = {},
    const NumericsPolicy& policy = NumericsPolicy::standard());

}  // namespace qtomo
