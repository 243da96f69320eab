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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qtomo {

/// Input failed a precondition (bad sizes, malformed text, invalid config).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested computation exceeds a configured capacity budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shared tolerance and budget record. All library checks read their
/// thresholds from one instance so the CLI, tests, and bindings agree.
struct NumericsPolicy {
  double trace_tol = 1e-12;        // pairwise trace orthonormality
  double hermiticity_tol = 1e-8;   // max |H - H^dag| entry allowed before diagonalize
  double norm_tol = 1e-10;         // state normalization drift
  double eig_residual_tol = 1e-9;  // ||H v - E v|| <= tol * ||H||
  double imag_tol = 1e-10;         // imaginary residue of real-valued expectations
  double correlation_imag_tol = 1e-9;
  double symmetry_imag_tol = 1e-10;  // symmetrized tensor entries
  double kernel_degeneracy_tol = 1e-12;
  double closure_rel_tol = 1e-7;

  std::size_t memory_budget_bytes = std::size_t{2} * 1024 * 1024 * 1024;
  std::size_t tensor_budget = 10'000'000;  // flat moment-tensor entries (n^m)
  int expansion_max_sites = 7;             // full Pauli expansion is 4^L terms

  static const NumericsPolicy& standard() {
    static const NumericsPolicy policy;
    return policy;
  }

  /// Throws CapacityError unless a dense complex D x D matrix fits the budget.
  void check_dense(std::size_t dimension, const std::string& what) const {
    const std::size_t bytes = dimension * dimension * sizeof(double) * 2;
    if (dimension != 0 && (bytes / dimension / 2 / sizeof(double)) != dimension)
      throw CapacityError(what + ": dense dimension overflows the budget");
    if (bytes > memory_budget_bytes)
      throw CapacityError(what + ": dense matrix of dimension " +
                          std::to_string(dimension) +
                          " exceeds the memory budget");
  }
};

}  // namespace qtomo
