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

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "qtomo/numerics.hpp"
#include "qtomo/pauli.hpp"

namespace qtomo {

/// Normalized pure state on `site_count` spins; amplitude index bit i is the
/// computational-basis value of site i.
struct StateVector {
  Eigen::VectorXcd amplitudes;
  int site_count = 0;

  static StateVector basis_state(int site_count, std::uint64_t index);

  double norm() const { return amplitudes.norm(); }
  void validate(const NumericsPolicy& policy = NumericsPolicy::standard()) const;
};

/// Hamiltonian as real couplings over an operator basis: H = sum c_a O_a.
struct HamiltonianSpec {
  OperatorBasis basis;
  Eigen::VectorXd couplings;
};

HamiltonianSpec make_hamiltonian(OperatorBasis basis, Eigen::VectorXd couplings);

/// Dense Hermitian matrix of the given couplings; O(n 2^L) assembly.
Eigen::MatrixXcd assemble(const HamiltonianSpec& spec,
                          const NumericsPolicy& policy = NumericsPolicy::standard());

/// Applies a Pauli string to a state: out = P * in. O(2^L).
void apply_string(const PauliString& s, const Eigen::VectorXcd& in,
                  Eigen::VectorXcd& out);

struct EigenSystem {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXcd vectors;   // columns are eigenvectors
  int site_count = 0;

  std::uint64_t dimension() const { return std::uint64_t{1} << site_count; }
};

/// Dense Hermitian eigendecomposition with residual validation.
EigenSystem diagonalize(const Eigen::MatrixXcd& hamiltonian,
                        const NumericsPolicy& policy = NumericsPolicy::standard());

/// exp(-i H t) |psi> through the eigenbasis.
StateVector evolve(const StateVector& state, const EigenSystem& eig, double time);

/// Evolves many states at once (one column each); used by batched protocols.
Eigen::MatrixXcd evolve_columns(const Eigen::MatrixXcd& states,
                                const EigenSystem& eig, double time);

/// <psi| P |psi> for a Hermitian Pauli string; validates the imaginary
/// residue against the policy.
double expectation(const StateVector& state, const PauliString& s,
                   const NumericsPolicy& policy = NumericsPolicy::standard());

/// <psi| H^m |psi> by repeated dense application.
double moment_expectation(const StateVector& state,
                          const Eigen::MatrixXcd& hamiltonian, int order);

/// Initial state plus its evolution under a fixed Hamiltonian for time t.
struct QuenchPair {
  StateVector initial;
  StateVector evolved;
  double time = 0.0;
};

QuenchPair make_quench_pair(StateVector initial, const EigenSystem& eig,
                            double time);

/// Two-point operator overlap C_ab(t) = Tr[O_a(0) O_b(t)] / 2^L with
/// O_b(t) in the Heisenberg picture. Exactly real for Hermitian inputs;
/// validated against the policy.
Eigen::MatrixXd heisenberg_correlation(
    const OperatorBasis& basis, const EigenSystem& eig, double time,
    const NumericsPolicy& policy = NumericsPolicy::standard());

/// Precomputed eigenbasis images of the basis operators, for evaluating
/// C(t) at many times or averaged over a window without re-transforming.
class CorrelationKernel {
 public:
  CorrelationKernel(const OperatorBasis& basis, const EigenSystem& eig,
                    const NumericsPolicy& policy = NumericsPolicy::standard());

  Eigen::MatrixXd at_time(double time) const;

  /// Mean of C(t) over `samples` equally spaced times in [t0, t1].
  Eigen::MatrixXd time_average(double t0, double t1, int samples) const;

 private:
  Eigen::MatrixXd with_phase_weights(const Eigen::MatrixXcd& weights) const;

  Eigen::VectorXd energies_;
  Eigen::MatrixXcd images_;  // dim^2 x n, column a = vec(V^dag O_a V)
  int n_ = 0;
  Eigen::Index dim_ = 0;
  double imag_tol_ = 0.0;
};

/// Content hash identifying (basis, couplings, L) for eigensystem reuse.
std::uint64_t hamiltonian_cache_key(const HamiltonianSpec& spec);

/// Binary dump of an eigensystem: little-endian f64 payload with a small
/// header (magic, L, dimension, key).
void save_eigensystem(const EigenSystem& eig, std::uint64_t key,
                      const std::string& path);

/// Loads a dump, checking magic and (when provided) the expected key.
EigenSystem load_eigensystem(const std::string& path,
                             std::optional<std::uint64_t> expected_key = {});

}  // namespace qtomo
