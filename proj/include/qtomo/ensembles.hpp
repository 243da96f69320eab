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

#include "qtomo/pauli.hpp"
#include "qtomo/quantum.hpp"

namespace qtomo {

enum class EnsembleKind { bloch_product, xyz_product, haar };

/// Initial-state ensemble. Draws are keyed by (seed, kind, index): equal
/// keys give bit-identical states regardless of call order or threading.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::bloch_product;
  int site_count = 0;
  std::uint64_t seed = 0;
};

StateVector sample_state(const EnsembleSpec& spec, std::uint64_t index);

/// Product state with the same Bloch-sphere spinor on every site; the
/// translation-invariant probe used by the grouped single-quench protocol.
StateVector translation_invariant_bloch_state(int site_count,
                                              std::uint64_t seed,
                                              std::uint64_t index);

enum class ModelFamily {
  tfim_yy,      // ZZ + transverse X + next-nearest YY, periodic
  ising_lt,     // ZZ + transverse X + longitudinal Z
  heisenberg,   // XX + YY + ZZ
  random_tfim,  // per-site X fields + per-bond ZZ
  random_local  // all 1-site terms + all 2-site nearest-neighbour terms
};

enum class Boundary { open, periodic };

struct CouplingRange {
  double lo = -1.0;
  double hi = 1.0;

  bool operator==(const CouplingRange&) const = default;
};

/// Model family instance: the family and boundary fix the operator basis
/// deterministically; couplings are drawn uniformly from `range` with the
/// given seed.
struct ModelSpec {
  ModelFamily family = ModelFamily::random_local;
  int site_count = 0;
  Boundary boundary = Boundary::open;
  std::uint64_t coupling_seed = 0;
  CouplingRange range;

  bool operator==(const ModelSpec&) const = default;
};

/// Number of independent couplings for the family (3 for the uniform
/// families; 2L-1 for random_tfim; 3L + 9(L-1) for open random_local).
int coupling_count(const ModelSpec& spec);

/// The deterministic operator basis of the family.
///
/// Ordering: random families list one-body terms site-major with letter
/// order X < Y < Z, then two-body terms bond-major (letter-major within a
/// bond). Uniform families list the translates of each coupling's term type
/// in the order the types appear in the Hamiltonian definition
/// (tfim_yy: ZZ, X, YY; ising_lt: ZZ, X, Z; heisenberg: XX, YY, ZZ),
/// site-major within a type.
OperatorBasis model_basis(const ModelSpec& spec);

/// Couplings as drawn, one per independent coupling (length 3 for uniform
/// families, length n for random ones).
Eigen::VectorXd family_couplings(const ModelSpec& spec);

/// Basis plus per-term couplings; uniform families repeat each type coupling
/// across its translates.
HamiltonianSpec instantiate_model(const ModelSpec& spec);

/// Summed translates of each term type, for protocols that reconstruct one
/// coupling per type. Only meaningful when every translate of a type shares
/// one coupling, i.e. the uniform families; random families are rejected.
struct GroupedBasis {
  std::vector<std::vector<PauliString>> groups;
  std::vector<std::string> names;
  int site_count = 0;

  int size() const { return static_cast<int>(groups.size()); }
};

GroupedBasis translated_sum_basis(const ModelSpec& spec);

const char* to_string(EnsembleKind kind);
const char* to_string(ModelFamily family);
const char* to_string(Boundary boundary);
EnsembleKind ensemble_kind_from_string(const std::string& s);
ModelFamily model_family_from_string(const std::string& s);
Boundary boundary_from_string(const std::string& s);

}  // namespace qtomo
