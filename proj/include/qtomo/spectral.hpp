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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/ensembles.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"
#include "qtomo/quantum.hpp"

namespace qtomo {

/// Monte-Carlo estimate of (1/p) M^T M over fresh ensemble states; symmetric
/// PSD up to roundoff (symmetrized on return).
Eigen::MatrixXd covariance_estimate(
    const OperatorBasis& basis, const EigenSystem& eig, double time,
    const EnsembleSpec& ensemble, int samples,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Heisenberg image of one basis operator expanded over all Pauli strings:
/// O_a(t) = sum_s P_s coeff[s]. Keys are body masks in canonical
/// (x_mask, z_mask) lexicographic order; the identity never appears for a
/// traceless input. Unitarity means the squared coefficients sum to 1.
struct OperatorExpansion {
  int source_index = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> coefficients;
  double completeness = 0.0;  // sum of squared coefficients
};

OperatorExpansion expand_operator(
    int alpha, const OperatorBasis& basis, const EigenSystem& eig, double time,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Product-state second-moment weights and the in-ansatz mixing matrix give
/// the exact ensemble-averaged covariance as projected + complement:
///   projected  = (I - C^T) B (I - C)
///   complement = sum over out-of-ansatz strings s of w_s ctilde_s ctilde_s^T
/// with B = diag((1/3)^l_a) and w_s = (1/3)^l_s. Their sum is the
/// infinite-sample covariance for product ensembles.
struct StructuralParts {
  Eigen::MatrixXd projected;
  Eigen::MatrixXd complement;
  Eigen::MatrixXd mixing;  // C: rows = ansatz strings, cols = source operator
};

StructuralParts structural_decomposition(
    const std::vector<OperatorExpansion>& expansions,
    const OperatorBasis& basis);

/// (1/3)^(l_max/2) * s2(I - C) with s2 the second-smallest singular value.
double gap_lower_bound(const Eigen::MatrixXd& mixing, int max_string_size);

/// Late-time mixing matrix under eigenstate thermalization: rank-one
/// projector c c^T / ||c||^2 onto the conserved coupling direction.
Eigen::MatrixXd eth_late_time_matrix(const Eigen::VectorXd& couplings);

/// Monte-Carlo mean of <O_a - O_a(t)>^2 over Haar states, one entry per
/// basis operator; bounded by 4 / (2^L + 1).
Eigen::VectorXd haar_reference(
    const OperatorBasis& basis, const EigenSystem& eig, double time,
    std::uint64_t seed, int samples,
    const NumericsPolicy& policy = NumericsPolicy::standard());

struct GapReport {
  Eigen::MatrixXd covariance;
  Eigen::VectorXd eigenvalues;  // ascending
  double gap = 0.0;             // s2 - s1 of the implied singular values
  double lower_bound = 0.0;     // 0 when no mixing matrix was supplied
  double eth_floor = 0.0;       // (1/3)^(l_max/2)
};

/// Summarizes a covariance estimate; `mixing` may be empty when C(t) is not
/// available.
GapReport make_gap_report(const Eigen::MatrixXd& covariance,
                          const Eigen::MatrixXd& mixing, int max_string_size);

std::string gap_report_json(const GapReport& report);

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<int> counts;
  int below = 0;  // outside [edges.front(), edges.back())
  int above = 0;
};

Histogram make_histogram(const Eigen::VectorXd& values, int bins, double lo,
                         double hi);

/// CSV with one row per bin: lo, hi, count.
void write_histogram_csv(const Histogram& h, const std::string& path);

}  // namespace qtomo
