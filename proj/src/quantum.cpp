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

#include "qtomo/quantum.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace qtomo {

namespace {

using cplx = std::complex<double>;

static_assert(std::endian::native == std::endian::little,
              "binary eigensystem dumps assume a little-endian host");

constexpr std::uint64_t kEigMagic = 0x314749454F4D5451ULL;  // "QTMOEIG1"

int parity(std::uint64_t v) { return std::popcount(v) & 1; }

/// Per-column scalar of a Pauli string: entry at (c ^ x_mask, c).
cplx string_base(const PauliString& s) {
  const int y_count = std::popcount(s.x_mask() & s.z_mask());
  switch ((s.phase_power() + y_count) & 3) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

int site_count_for_dimension(Eigen::Index dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0)
    throw ValidationError("dimension " + std::to_string(dim) +
                          " is not a power of two");
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

StateVector StateVector::basis_state(int site_count, std::uint64_t index) {
  if (site_count < 1 || site_count > 62)
    throw ValidationError("bad site count " + std::to_string(site_count));
  const std::uint64_t dim = std::uint64_t{1} << site_count;
  if (index >= dim) throw ValidationError("basis index out of range");
  StateVector s;
  s.site_count = site_count;
  s.amplitudes = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim));
  s.amplitudes[static_cast<Eigen::Index>(index)] = 1.0;
  return s;
}

void StateVector::validate(const NumericsPolicy& policy) const {
  const std::uint64_t dim = std::uint64_t{1} << site_count;
  if (static_cast<std::uint64_t>(amplitudes.size()) != dim)
    throw ValidationError("state dimension does not match site count");
  if (std::abs(norm() - 1.0) > policy.norm_tol)
    throw ValidationError("state is not normalized: |norm - 1| = " +
                          std::to_string(std::abs(norm() - 1.0)));
}

HamiltonianSpec make_hamiltonian(OperatorBasis basis,
                                 Eigen::VectorXd couplings) {
  if (couplings.size() != basis.size())
    throw ValidationError("coupling count " + std::to_string(couplings.size()) +
                          " does not match basis size " +
                          std::to_string(basis.size()));
  if (!couplings.allFinite())
    throw ValidationError("couplings must be finite");
  return HamiltonianSpec{std::move(basis), std::move(couplings)};
}

Eigen::MatrixXcd assemble(const HamiltonianSpec& spec,
                          const NumericsPolicy& policy) {
  const int L = spec.basis.site_count();
  const std::uint64_t dim = std::uint64_t{1} << L;
  policy.check_dense(dim, "assemble");
  if (spec.couplings.size() != spec.basis.size())
    throw ValidationError("coupling count does not match basis size");
  Eigen::MatrixXcd h =
      Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim),
                             static_cast<Eigen::Index>(dim));
  for (int a = 0; a < spec.basis.size(); ++a) {
    const PauliString& s = spec.basis.term(a);
    const cplx base = spec.couplings[a] * string_base(s);
    const std::uint64_t x = s.x_mask();
    const std::uint64_t z = s.z_mask();
    for (std::uint64_t c = 0; c < dim; ++c) {
      const double sign = parity(c & z) ? -1.0 : 1.0;
      h(static_cast<Eigen::Index>(c ^ x), static_cast<Eigen::Index>(c)) +=
          base * sign;
    }
  }
  return h;
}

void apply_string(const PauliString& s, const Eigen::VectorXcd& in,
                  Eigen::VectorXcd& out) {
  const std::uint64_t dim = std::uint64_t{1} << s.site_count();
  if (static_cast<std::uint64_t>(in.size()) != dim)
    throw ValidationError("state dimension does not match string site count");
  out.resize(in.size());
  const cplx base = string_base(s);
  const std::uint64_t x = s.x_mask();
  const std::uint64_t z = s.z_mask();
  for (std::uint64_t c = 0; c < dim; ++c) {
    const double sign = parity(c & z) ? -1.0 : 1.0;
    out[static_cast<Eigen::Index>(c ^ x)] =
        base * sign * in[static_cast<Eigen::Index>(c)];
  }
}

EigenSystem diagonalize(const Eigen::MatrixXcd& hamiltonian,
                        const NumericsPolicy& policy) {
  if (hamiltonian.rows() != hamiltonian.cols())
    throw ValidationError("hamiltonian must be square");
  const int L = site_count_for_dimension(hamiltonian.rows());
  policy.check_dense(static_cast<std::size_t>(hamiltonian.rows()),
                     "diagonalize");
  const double asym =
      (hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff();
  if (asym > policy.hermiticity_tol)
    throw ValidationError("hamiltonian is not Hermitian: max asymmetry " +
                          std::to_string(asym));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hamiltonian);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed to converge");

  EigenSystem eig;
  eig.energies = solver.eigenvalues();
  eig.vectors = solver.eigenvectors();
  eig.site_count = L;

  const double scale = std::max(eig.energies.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::MatrixXcd residual =
      hamiltonian * eig.vectors - eig.vectors * eig.energies.asDiagonal();
  const double worst = residual.colwise().norm().maxCoeff();
  if (worst > policy.eig_residual_tol * scale)
    throw std::runtime_error("eigenpair residual " + std::to_string(worst) +
                             " exceeds tolerance");
  return eig;
}

StateVector evolve(const StateVector& state, const EigenSystem& eig,
                   double time) {
  if (state.site_count != eig.site_count)
    throw ValidationError("state and eigensystem site counts differ");
  const cplx mi(0.0, -1.0);
  const Eigen::VectorXcd phases =
      (mi * time * eig.energies.array()).exp().matrix();
  StateVector out;
  out.site_count = state.site_count;
  out.amplitudes =
      eig.vectors *
      (phases.array() * (eig.vectors.adjoint() * state.amplitudes).array())
          .matrix();
  return out;
}

Eigen::MatrixXcd evolve_columns(const Eigen::MatrixXcd& states,
                                const EigenSystem& eig, double time) {
  if (states.rows() != static_cast<Eigen::Index>(eig.dimension()))
    throw ValidationError("column dimension does not match eigensystem");
  const cplx mi(0.0, -1.0);
  const Eigen::VectorXcd phases =
      (mi * time * eig.energies.array()).exp().matrix();
  Eigen::MatrixXcd in_eigenbasis = eig.vectors.adjoint() * states;
  in_eigenbasis.array().colwise() *= phases.array();
  return eig.vectors * in_eigenbasis;
}

double expectation(const StateVector& state, const PauliString& s,
                   const NumericsPolicy& policy) {
  if (state.site_count != s.site_count())
    throw ValidationError("state and operator site counts differ");
  if (!s.is_hermitian())
    throw ValidationError("expectation requires a Hermitian string");
  const std::uint64_t dim = std::uint64_t{1} << s.site_count();
  const cplx base = string_base(s);
  const std::uint64_t x = s.x_mask();
  const std::uint64_t z = s.z_mask();
  const cplx* v = state.amplitudes.data();
  cplx acc(0, 0);
  for (std::uint64_t c = 0; c < dim; ++c) {
    const double sign = parity(c & z) ? -1.0 : 1.0;
    acc += std::conj(v[c ^ x]) * (base * sign) * v[c];
  }
  if (std::abs(acc.imag()) > policy.imag_tol)
    throw std::runtime_error("expectation has imaginary residue " +
                             std::to_string(acc.imag()));
  return acc.real();
}

double moment_expectation(const StateVector& state,
                          const Eigen::MatrixXcd& hamiltonian, int order) {
  if (order < 0) throw ValidationError("moment order must be non-negative");
  if (hamiltonian.rows() != state.amplitudes.size())
    throw ValidationError("state and hamiltonian dimensions differ");
  Eigen::VectorXcd v = state.amplitudes;
  for (int k = 0; k < order; ++k) v = hamiltonian * v;
  return state.amplitudes.dot(v).real();
}

QuenchPair make_quench_pair(StateVector initial, const EigenSystem& eig,
                            double time) {
  QuenchPair pair;
  pair.evolved = evolve(initial, eig, time);
  pair.initial = std::move(initial);
  pair.time = time;
  return pair;
}

CorrelationKernel::CorrelationKernel(const OperatorBasis& basis,
                                     const EigenSystem& eig,
                                     const NumericsPolicy& policy)
    : energies_(eig.energies),
      n_(basis.size()),
      dim_(static_cast<Eigen::Index>(eig.dimension())),
      imag_tol_(policy.correlation_imag_tol) {
  if (basis.site_count() != eig.site_count)
    throw ValidationError("basis and eigensystem site counts differ");
  const std::size_t bytes = static_cast<std::size_t>(dim_) *
                            static_cast<std::size_t>(dim_) * n_ * sizeof(cplx);
  if (bytes > policy.memory_budget_bytes)
    throw CapacityError("correlation kernel needs " + std::to_string(bytes) +
                        " bytes, over the memory budget");
  images_.resize(dim_ * dim_, n_);
  Eigen::MatrixXcd applied(dim_, dim_);
  Eigen::VectorXcd column(dim_);
  for (int a = 0; a < n_; ++a) {
    const PauliString& s = basis.term(a);
    for (Eigen::Index c = 0; c < dim_; ++c) {
      apply_string(s, eig.vectors.col(c), column);
      applied.col(c) = column;
    }
    const Eigen::MatrixXcd image = eig.vectors.adjoint() * applied;
    images_.col(a) = Eigen::Map<const Eigen::VectorXcd>(image.data(),
                                                        dim_ * dim_);
  }
}

Eigen::MatrixXd CorrelationKernel::with_phase_weights(
    const Eigen::MatrixXcd& weights) const {
  const Eigen::Map<const Eigen::VectorXcd> wvec(weights.data(), dim_ * dim_);
  Eigen::MatrixXcd weighted = images_;
  weighted.array().colwise() *= wvec.array();
  const Eigen::MatrixXcd c =
      (images_.adjoint() * weighted) / static_cast<double>(dim_);
  const double imag_max = c.imag().cwiseAbs().maxCoeff();
  if (imag_max > imag_tol_)
    throw std::runtime_error("correlation matrix has imaginary residue " +
                             std::to_string(imag_max));
  return c.real();
}

Eigen::MatrixXd CorrelationKernel::at_time(double time) const {
  const cplx im(0.0, 1.0);
  const Eigen::VectorXcd up = (im * time * energies_.array()).exp().matrix();
  // weights(j, k) = exp(i (E_j - E_k) t), column-major like the images.
  const Eigen::MatrixXcd weights = up * up.adjoint();
  return with_phase_weights(weights);
}

Eigen::MatrixXd CorrelationKernel::time_average(double t0, double t1,
                                                int samples) const {
  if (samples < 2 || t1 <= t0)
    throw ValidationError("time_average needs t1 > t0 and samples >= 2");
  const cplx im(0.0, 1.0);
  Eigen::MatrixXcd weights = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1);
    const Eigen::VectorXcd up = (im * t * energies_.array()).exp().matrix();
    weights += up * up.adjoint();
  }
  weights /= static_cast<double>(samples);
  return with_phase_weights(weights);
}

Eigen::MatrixXd heisenberg_correlation(const OperatorBasis& basis,
                                       const EigenSystem& eig, double time,
                                       const NumericsPolicy& policy) {
  return CorrelationKernel(basis, eig, policy).at_time(time);
}

std::uint64_t hamiltonian_cache_key(const HamiltonianSpec& spec) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const std::uint32_t L = static_cast<std::uint32_t>(spec.basis.site_count());
  h = fnv1a(&L, sizeof(L), h);
  for (int a = 0; a < spec.basis.size(); ++a) {
    const std::uint64_t masks[2] = {spec.basis.term(a).x_mask(),
                                    spec.basis.term(a).z_mask()};
    h = fnv1a(masks, sizeof(masks), h);
  }
  h = fnv1a(spec.couplings.data(), sizeof(double) * spec.couplings.size(), h);
  return h;
}

void save_eigensystem(const EigenSystem& eig, std::uint64_t key,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for write");
  const std::uint64_t dim = eig.dimension();
  const std::uint32_t L = static_cast<std::uint32_t>(eig.site_count);
  out.write(reinterpret_cast<const char*>(&kEigMagic), sizeof(kEigMagic));
  out.write(reinterpret_cast<const char*>(&L), sizeof(L));
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  out.write(reinterpret_cast<const char*>(&key), sizeof(key));
  out.write(reinterpret_cast<const char*>(eig.energies.data()),
            sizeof(double) * dim);
  out.write(reinterpret_cast<const char*>(eig.vectors.data()),
            sizeof(cplx) * dim * dim);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

EigenSystem load_eigensystem(const std::string& path,
                             std::optional<std::uint64_t> expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::uint64_t magic = 0, dim = 0, key = 0;
  std::uint32_t L = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&L), sizeof(L));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  in.read(reinterpret_cast<char*>(&key), sizeof(key));
  if (!in || magic != kEigMagic)
    throw ValidationError("'" + path + "' is not an eigensystem dump");
  if (L < 1 || L > 62 || dim != (std::uint64_t{1} << L))
    throw ValidationError("corrupt eigensystem header in '" + path + "'");
  if (expected_key && key != *expected_key)
    throw ValidationError("eigensystem key mismatch in '" + path + "'");
  EigenSystem eig;
  eig.site_count = static_cast<int>(L);
  eig.energies.resize(static_cast<Eigen::Index>(dim));
  eig.vectors.resize(static_cast<Eigen::Index>(dim),
                     static_cast<Eigen::Index>(dim));
  in.read(reinterpret_cast<char*>(eig.energies.data()), sizeof(double) * dim);
  in.read(reinterpret_cast<char*>(eig.vectors.data()), sizeof(cplx) * dim * dim);
  if (!in) throw ValidationError("truncated eigensystem dump '" + path + "'");
  return eig;
}

}  // namespace qtomo
