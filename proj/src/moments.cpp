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

#include "qtomo/moments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qtomo/rng.hpp"

namespace qtomo {

namespace {

using cd = std::complex<double>;

void apply_observable(const std::vector<PauliString>& op,
                      const Eigen::VectorXcd& in, Eigen::VectorXcd& out,
                      Eigen::VectorXcd& scratch) {
  apply_string(op[0], in, out);
  for (std::size_t s = 1; s < op.size(); ++s) {
    apply_string(op[s], in, scratch);
    out += scratch;
  }
}

// Per sorted multi-index: accumulated complex leaf value and visit count.
using MultisetSums = std::unordered_map<std::size_t, std::pair<cd, double>>;

// Walks every ordered multi-index of length `order`, maintaining two state
// stacks under the product of observables, and hands the two fully-applied
// states to `leaf`. Accumulation is per sorted multi-index, which averages
// over index permutations (each ordered tuple appears exactly once).
template <typename Leaf>
void accumulate_tensor(const ObservableSet& obs, int order,
                       const Eigen::VectorXcd& seed_a,
                       const Eigen::VectorXcd& seed_b, Leaf&& leaf,
                       MultisetSums& sums) {
  const int n = obs.size();
  std::vector<Eigen::VectorXcd> sa(order + 1), sb(order + 1);
  sa[0] = seed_a;
  sb[0] = seed_b;
  Eigen::VectorXcd scratch(seed_a.size());
  std::vector<int> digits(order), sorted(order);

  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == order) {
      sorted = digits;
      std::sort(sorted.begin(), sorted.end());
      std::size_t flat = 0;
      for (int k = 0; k < order; ++k)
        flat = flat * std::size_t(n) + std::size_t(sorted[k]);
      auto& slot = sums[flat];
      slot.first += leaf(sa[depth], sb[depth]);
      slot.second += 1.0;
      return;
    }
    for (int a = 0; a < n; ++a) {
      digits[depth] = a;
      apply_observable(obs.ops[a], sa[depth], sa[depth + 1], scratch);
      apply_observable(obs.ops[a], sb[depth], sb[depth + 1], scratch);
      self(self, depth + 1);
    }
  };
  rec(rec, 0);
}

// Averages the accumulated sums, validates that symmetrization removed the
// imaginary parts, and writes each multiset average to every permutation slot.
MomentTensor finalize_tensor(int order, int n, std::size_t flat_size,
                             MultisetSums& sums,
                             const NumericsPolicy& policy) {
  MomentTensor t;
  t.order = order;
  t.basis_size = n;
  t.coefficients.assign(flat_size, 0.0);

  double magnitude = 0.0;
  for (const auto& [flat, slot] : sums)
    magnitude = std::max(magnitude, std::abs(slot.first) / slot.second);
  const double imag_tol = policy.symmetry_imag_tol * std::max(1.0, magnitude);

  std::vector<int> digits(order);
  for (const auto& [flat, slot] : sums) {
    const cd avg = slot.first / slot.second;
    if (std::abs(avg.imag()) > imag_tol)
      throw ValidationError(
          "symmetrized moment entry has imaginary residue " +
          std::to_string(avg.imag()));
    std::size_t rem = flat;
    for (int k = order - 1; k >= 0; --k) {
      digits[k] = int(rem % std::size_t(n));
      rem /= std::size_t(n);
    }
    do {
      std::size_t pos = 0;
      for (int k = 0; k < order; ++k)
        pos = pos * std::size_t(n) + std::size_t(digits[k]);
      t.coefficients[pos] = avg.real();
    } while (std::next_permutation(digits.begin(), digits.end()));
  }
  return t;
}

void validate_observables(const ObservableSet& obs) {
  if (obs.ops.empty()) throw ValidationError("observable set is empty");
  for (const auto& group : obs.ops) {
    if (group.empty()) throw ValidationError("empty observable group");
    for (const auto& s : group) {
      if (s.site_count() != obs.site_count)
        throw ValidationError("observable register size mismatch");
      if (s.phase_power() != 0)
        throw ValidationError("observables must carry no phase");
    }
  }
}

// Compressed multiset form for fast repeated contraction: one entry per
// sorted multi-index, value pre-multiplied by the multinomial weight.
struct PackedTensor {
  int order = 0;
  std::vector<int> digits;     // order entries per multiset
  std::vector<double> values;  // symmetrized coefficient * weight
};

PackedTensor pack(const MomentTensor& t) {
  const int n = t.basis_size;
  const int m = t.order;
  std::vector<double> fact(std::size_t(m) + 1, 1.0);
  for (int k = 1; k <= m; ++k) fact[k] = fact[k - 1] * k;

  PackedTensor p;
  p.order = m;
  std::vector<int> idx(m, 0);
  while (true) {
    double weight = fact[m];
    int run = 1;
    for (int k = 1; k < m; ++k) {
      if (idx[k] == idx[k - 1]) {
        ++run;
      } else {
        weight /= fact[run];
        run = 1;
      }
    }
    weight /= fact[run];

    std::size_t flat = 0;
    for (int k = 0; k < m; ++k)
      flat = flat * std::size_t(n) + std::size_t(idx[k]);
    const double v = t.coefficients[flat] * weight;
    if (v != 0.0) {
      p.digits.insert(p.digits.end(), idx.begin(), idx.end());
      p.values.push_back(v);
    }

    int k = m - 1;
    while (k >= 0 && idx[k] == n - 1) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < m; ++j) idx[j] = idx[k];
  }
  return p;
}

// Contraction value at x; when grad is non-null, accumulates the gradient.
double eval_packed(const PackedTensor& p, const Eigen::VectorXd& x,
                   Eigen::VectorXd* grad, std::vector<double>& pre,
                   std::vector<double>& suf) {
  const int m = p.order;
  double total = 0.0;
  for (std::size_t mu = 0; mu < p.values.size(); ++mu) {
    const int* d = p.digits.data() + mu * std::size_t(m);
    pre[0] = 1.0;
    for (int k = 0; k < m; ++k) pre[k + 1] = pre[k] * x[d[k]];
    total += p.values[mu] * pre[m];
    if (grad) {
      suf[m] = 1.0;
      for (int k = m - 1; k >= 0; --k) suf[k] = suf[k + 1] * x[d[k]];
      for (int k = 0; k < m; ++k)
        (*grad)[d[k]] += p.values[mu] * pre[k] * suf[k + 1];
    }
  }
  return total;
}

struct Minimizer {
  const std::vector<PackedTensor>& packed;
  int n;
  std::vector<double> pre, suf;

  Minimizer(const std::vector<PackedTensor>& p, int dims, int max_order)
      : packed(p), n(dims),
        pre(std::size_t(max_order) + 1), suf(std::size_t(max_order) + 1) {}

  void eval(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    for (std::size_t m = 0; m < packed.size(); ++m) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      r[static_cast<Eigen::Index>(m)] = eval_packed(packed[m], x, &row, pre, suf);
      j.row(static_cast<Eigen::Index>(m)) = row;
    }
  }

  // Levenberg-damped Gauss-Newton on the unit sphere (renormalized steps).
  bool minimize(Eigen::VectorXd& x, const SolveOptions& opt, double& resnorm) {
    const Eigen::Index k = static_cast<Eigen::Index>(packed.size());
    Eigen::VectorXd r(k), rn(k);
    Eigen::MatrixXd j(k, n), jn(k, n);
    eval(x, r, j);
    double f = r.squaredNorm();
    double mu = 1e-3 * j.squaredNorm() / n + 1e-12;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
      if (std::sqrt(f) < opt.tol) break;
      const Eigen::MatrixXd normal =
          j.transpose() * j + mu * Eigen::MatrixXd::Identity(n, n);
      const Eigen::VectorXd step = normal.ldlt().solve(-j.transpose() * r);
      Eigen::VectorXd xn = x + step;
      const double norm = xn.norm();
      if (norm < 1e-12) {
        mu *= 8.0;
        continue;
      }
      xn /= norm;
      eval(xn, rn, jn);
      const double fn = rn.squaredNorm();
      if (fn < f) {
        x = xn;
        r = rn;
        j = jn;
        f = fn;
        mu = std::max(mu / 3.0, 1e-14);
      } else {
        mu *= 8.0;
        if (mu > 1e14) break;
      }
    }
    resnorm = std::sqrt(f);
    return resnorm < opt.tol;
  }
};

double line_angle(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c =
      std::min(1.0, std::abs(a.dot(b)) / std::max(a.norm() * b.norm(), 1e-300));
  return std::acos(c);
}

}  // namespace

ObservableSet ObservableSet::from_basis(const OperatorBasis& basis) {
  ObservableSet obs;
  obs.site_count = basis.site_count();
  for (const auto& term : basis.terms()) obs.ops.push_back({term});
  validate_observables(obs);
  return obs;
}

ObservableSet ObservableSet::from_groups(const GroupedBasis& grouped) {
  ObservableSet obs;
  obs.site_count = grouped.site_count;
  obs.ops = grouped.groups;
  validate_observables(obs);
  return obs;
}

std::size_t MomentTensor::flat_size(int basis_size, int order,
                                    const NumericsPolicy& policy) {
  if (basis_size < 1) throw ValidationError("tensor needs >= 1 observable");
  if (order < 1) throw ValidationError("tensor order must be >= 1");
  std::size_t size = 1;
  for (int k = 0; k < order; ++k) {
    if (size > policy.tensor_budget / std::size_t(basis_size))
      throw CapacityError("moment tensor of order " + std::to_string(order) +
                          " over " + std::to_string(basis_size) +
                          " observables exceeds the tensor budget");
    size *= std::size_t(basis_size);
  }
  if (size > policy.tensor_budget)
    throw CapacityError("moment tensor exceeds the tensor budget");
  return size;
}

double MomentTensor::contract(const Eigen::VectorXd& x) const {
  if (x.size() != basis_size)
    throw ValidationError("contraction vector length mismatch");
  double total = 0.0;
  const std::size_t n = std::size_t(basis_size);
  for (std::size_t flat = 0; flat < coefficients.size(); ++flat) {
    const double c = coefficients[flat];
    if (c == 0.0) continue;
    double xp = 1.0;
    std::size_t rem = flat;
    for (int k = 0; k < order; ++k) {
      xp *= x[static_cast<Eigen::Index>(rem % n)];
      rem /= n;
    }
    total += c * xp;
  }
  return total;
}

Eigen::VectorXd MomentTensor::gradient(const Eigen::VectorXd& x) const {
  if (x.size() != basis_size)
    throw ValidationError("gradient vector length mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(basis_size);
  const std::size_t n = std::size_t(basis_size);
  const std::size_t sub = coefficients.size() / n;  // n^(order-1)
  for (std::size_t fa = 0; fa < sub; ++fa) {
    double xp = 1.0;
    std::size_t rem = fa;
    for (int k = 1; k < order; ++k) {
      xp *= x[static_cast<Eigen::Index>(rem % n)];
      rem /= n;
    }
    if (xp == 0.0) continue;
    // Differentiating the leading slot suffices for a symmetric tensor.
    for (int b = 0; b < basis_size; ++b)
      g[b] += coefficients[std::size_t(b) * sub + fa] * xp;
  }
  return double(order) * g;
}

MomentTensor build_moment_tensor(int order, const ObservableSet& obs,
                                 const QuenchPair& pair,
                                 const NumericsPolicy& policy) {
  validate_observables(obs);
  if (pair.initial.site_count != obs.site_count ||
      pair.evolved.site_count != obs.site_count)
    throw ValidationError("quench pair acts on a different register");
  const std::size_t size = MomentTensor::flat_size(obs.size(), order, policy);

  const Eigen::VectorXcd& psi0 = pair.initial.amplitudes;
  const Eigen::VectorXcd& psit = pair.evolved.amplitudes;
  MultisetSums sums;
  accumulate_tensor(
      obs, order, psi0, psit,
      [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) -> cd {
        return psi0.dot(a) - psit.dot(b);
      },
      sums);
  return finalize_tensor(order, obs.size(), size, sums, policy);
}

MomentTensor linearized_tensor(int order, const ObservableSet& obs,
                               const Eigen::MatrixXcd& hamiltonian,
                               const StateVector& state, double time,
                               const NumericsPolicy& policy) {
  validate_observables(obs);
  if (state.site_count != obs.site_count)
    throw ValidationError("state acts on a different register");
  if (hamiltonian.rows() != state.amplitudes.size() ||
      hamiltonian.cols() != state.amplitudes.size())
    throw ValidationError("hamiltonian dimension mismatch");
  const std::size_t size = MomentTensor::flat_size(obs.size(), order, policy);

  const Eigen::VectorXcd& psi = state.amplitudes;
  const Eigen::VectorXcd hpsi = hamiltonian * psi;
  const cd it = cd(0.0, 1.0) * time;
  MultisetSums sums;
  accumulate_tensor(
      obs, order, hpsi, psi,
      [&](const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) -> cd {
        // i t (<psi| Pi H |psi> - <psi| H Pi |psi>) = i t <psi|[Pi, H]|psi>.
        return it * (psi.dot(a) - hpsi.dot(b));
      },
      sums);
  return finalize_tensor(order, obs.size(), size, sums, policy);
}

Eigen::VectorXd residuals(const Eigen::VectorXd& x,
                          const std::vector<MomentTensor>& tensors) {
  if (tensors.empty()) throw ValidationError("no tensors to evaluate");
  Eigen::VectorXd r(static_cast<Eigen::Index>(tensors.size()));
  for (std::size_t m = 0; m < tensors.size(); ++m)
    r[static_cast<Eigen::Index>(m)] = tensors[m].contract(x);
  return r;
}

std::vector<SolutionCluster> solve_system(
    const std::vector<MomentTensor>& tensors, const SolveOptions& options,
    const Eigen::VectorXd* truth, SolveDiagnostics* diag) {
  if (tensors.empty()) throw ValidationError("no tensors to solve");
  const int n = tensors[0].basis_size;
  if (n < 2) throw ValidationError("solver needs >= 2 observables");
  int max_order = 0;
  for (const auto& t : tensors) {
    if (t.basis_size != n)
      throw ValidationError("tensors range over different observable sets");
    if (t.coefficients.size() !=
        MomentTensor::flat_size(n, t.order, NumericsPolicy::standard()))
      throw ValidationError("tensor coefficient storage has the wrong size");
    max_order = std::max(max_order, t.order);
  }
  if (options.starts < 1) throw ValidationError("solver needs >= 1 start");
  if (truth && truth->size() != n)
    throw ValidationError("truth vector length mismatch");

  std::vector<PackedTensor> packed;
  packed.reserve(tensors.size());
  for (const auto& t : tensors) packed.push_back(pack(t));

  Minimizer minimizer(packed, n, max_order);
  struct Converged {
    Eigen::VectorXd x;
    double res;
  };
  std::vector<Converged> found;
  for (int start = 0; start < options.starts; ++start) {
    RandomStream rng(options.seed, kStreamSolver, std::uint64_t(start));
    Eigen::VectorXd x(n);
    do {
      for (int k = 0; k < n; ++k) x[k] = rng.normal();
    } while (x.norm() < 1e-12);
    x.normalize();
    double res = 0.0;
    if (minimizer.minimize(x, options, res)) found.push_back({x, res});
  }
  if (diag) {
    diag->total_starts = options.starts;
    diag->converged_starts = static_cast<int>(found.size());
  }

  std::sort(found.begin(), found.end(),
            [](const Converged& a, const Converged& b) { return a.res < b.res; });

  const double cluster_rad =
      options.cluster_angle_deg * std::numbers::pi / 180.0;
  std::vector<SolutionCluster> clusters;
  for (const auto& c : found) {
    bool joined = false;
    for (auto& cl : clusters) {
      if (line_angle(c.x, cl.representative) < cluster_rad) {
        ++cl.multiplicity;
        cl.max_residual = std::max(cl.max_residual, c.res);
        joined = true;
        break;
      }
    }
    if (!joined) {
      SolutionCluster cl;
      cl.representative = c.x;
      Eigen::Index at = 0;
      cl.representative.cwiseAbs().maxCoeff(&at);
      if (cl.representative[at] < 0.0) cl.representative = -cl.representative;
      cl.multiplicity = 1;
      cl.max_residual = c.res;
      clusters.push_back(std::move(cl));
    }
  }

  const double truth_rad = options.truth_angle_deg * std::numbers::pi / 180.0;
  for (auto& cl : clusters)
    cl.matches_truth =
        truth != nullptr && line_angle(cl.representative, *truth) < truth_rad;

  std::sort(clusters.begin(), clusters.end(),
            [](const SolutionCluster& a, const SolutionCluster& b) {
              if (a.multiplicity != b.multiplicity)
                return a.multiplicity > b.multiplicity;
              return a.max_residual < b.max_residual;
            });
  return clusters;
}

std::vector<SolutionCluster> generic_clusters(
    const std::vector<SolutionCluster>& clusters,
    const std::vector<MomentTensor>& tensors, const ObservableSet& obs,
    const GenericityOptions& options, const Eigen::VectorXd* truth) {
  if (tensors.empty()) throw ValidationError("no tensors to filter against");
  const int n = tensors[0].basis_size;
  for (const auto& t : tensors)
    if (t.basis_size != n)
      throw ValidationError("tensors range over different observable sets");
  if (obs.size() != n)
    throw ValidationError("observable set does not match the tensors");
  if (obs.site_count > 10)
    throw CapacityError("spectral genericity filter supports at most 10 sites");
  if (!(options.refine_tol > 0.0) || options.refine_iterations < 1 ||
      !(options.distinct_rel_tol > 0.0) || options.min_distinct < 0)
    throw ValidationError("invalid genericity options");
  if (truth && truth->size() != n)
    throw ValidationError("truth vector length mismatch");

  const Eigen::Index dim = Eigen::Index(1) << obs.site_count;
  const int min_distinct =
      options.min_distinct > 0
          ? options.min_distinct
          : std::min<int>(n + 1, static_cast<int>(dim));

  std::vector<PackedTensor> packed;
  int max_order = 0;
  for (const auto& t : tensors) {
    packed.push_back(pack(t));
    max_order = std::max(max_order, t.order);
  }
  Minimizer minimizer(packed, n, max_order);
  SolveOptions refine;
  refine.tol = options.refine_tol;
  refine.max_iterations = options.refine_iterations;

  struct Survivor {
    Eigen::VectorXd x;
    double res;
    int multiplicity;
  };
  std::vector<Survivor> kept;
  for (const auto& cl : clusters) {
    if (cl.representative.size() != n)
      throw ValidationError("cluster representative length mismatch");
    Eigen::VectorXd x = cl.representative.normalized();
    double res = 0.0;
    // Stalls near a degenerate block direction slide onto it here, where
    // the collapsed spectrum below exposes them; strict local minima of the
    // residual cannot reach the tolerance and are dropped outright.
    if (!minimizer.minimize(x, refine, res)) continue;

    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(dim, dim);
    for (int a = 0; a < n; ++a)
      for (const PauliString& term : obs.ops[std::size_t(a)])
        k += x[a] * term.to_matrix();
    const Eigen::VectorXd energies =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(k).eigenvalues();
    const double scale = std::max(energies.cwiseAbs().maxCoeff(), 1e-300);
    int distinct = 1;
    for (Eigen::Index i = 1; i < energies.size(); ++i)
      if (energies[i] - energies[i - 1] > options.distinct_rel_tol * scale)
        ++distinct;
    if (distinct < min_distinct) continue;
    kept.push_back({std::move(x), res, cl.multiplicity});
  }

  std::sort(kept.begin(), kept.end(),
            [](const Survivor& a, const Survivor& b) { return a.res < b.res; });
  const double cluster_rad =
      options.cluster_angle_deg * std::numbers::pi / 180.0;
  std::vector<SolutionCluster> merged;
  for (const auto& s : kept) {
    bool joined = false;
    for (auto& cl : merged) {
      if (line_angle(s.x, cl.representative) < cluster_rad) {
        cl.multiplicity += s.multiplicity;
        cl.max_residual = std::max(cl.max_residual, s.res);
        joined = true;
        break;
      }
    }
    if (!joined) {
      SolutionCluster cl;
      cl.representative = s.x;
      Eigen::Index at = 0;
      cl.representative.cwiseAbs().maxCoeff(&at);
      if (cl.representative[at] < 0.0) cl.representative = -cl.representative;
      cl.multiplicity = s.multiplicity;
      cl.max_residual = s.res;
      merged.push_back(std::move(cl));
    }
  }

  const double truth_rad = options.truth_angle_deg * std::numbers::pi / 180.0;
  for (auto& cl : merged)
    cl.matches_truth =
        truth != nullptr && line_angle(cl.representative, *truth) < truth_rad;

  std::sort(merged.begin(), merged.end(),
            [](const SolutionCluster& a, const SolutionCluster& b) {
              if (a.multiplicity != b.multiplicity)
                return a.multiplicity > b.multiplicity;
              return a.max_residual < b.max_residual;
            });
  return merged;
}

bool moment_closure_check(const Eigen::MatrixXcd& hamiltonian,
                          const QuenchPair& pair, const NumericsPolicy& policy,
                          double* max_relative_deviation) {
  const int sites = pair.initial.site_count;
  if (sites > 8)
    throw CapacityError("moment closure supports at most 8 sites");
  const Eigen::Index dim = Eigen::Index{1} << sites;
  if (hamiltonian.rows() != dim || hamiltonian.cols() != dim ||
      pair.evolved.amplitudes.size() != dim)
    throw ValidationError("closure check dimension mismatch");

  double maxdev = 0.0;
  const EigenSystem eig = diagonalize(hamiltonian, policy);
  const double emax = eig.energies.cwiseAbs().maxCoeff();
  if (emax > 0.0) {
    // Normalized energies keep powers of order ~dimension representable.
    const Eigen::VectorXd e = eig.energies / emax;
    const Eigen::VectorXd w0 =
        (eig.vectors.adjoint() * pair.initial.amplitudes).cwiseAbs2();
    const Eigen::VectorXd wt =
        (eig.vectors.adjoint() * pair.evolved.amplitudes).cwiseAbs2();
    const int d = static_cast<int>(dim);
    for (int m = d; m <= d + 2; ++m) {
      double m0 = 0.0, mt = 0.0, a0 = 0.0, at = 0.0;
      for (Eigen::Index k = 0; k < dim; ++k) {
        const double mag = std::pow(std::abs(e[k]), m);
        const double val = (e[k] < 0.0 && (m & 1)) ? -mag : mag;
        m0 += w0[k] * val;
        mt += wt[k] * val;
        a0 += w0[k] * mag;
        at += wt[k] * mag;
      }
      const double scale = std::max(a0, at);
      if (scale > 1e-14)
        maxdev = std::max(maxdev, std::abs(m0 - mt) / scale);
    }
  }
  if (max_relative_deviation) *max_relative_deviation = maxdev;
  return maxdev <= policy.closure_rel_tol;
}

ScaleRecovery recover_scale(const Eigen::VectorXd& direction,
                            const OperatorBasis& basis, const QuenchPair& pair,
                            const ScaleOptions& options,
                            const NumericsPolicy& policy) {
  if (direction.size() != basis.size())
    throw ValidationError("direction length does not match the basis");
  const double dn = direction.norm();
  if (dn == 0.0) throw ValidationError("direction must be nonzero");
  if (pair.time <= 0.0) throw ValidationError("scale needs a positive time");
  if (pair.initial.site_count != basis.site_count())
    throw ValidationError("quench pair acts on a different register");
  if (basis.site_count() > 8)
    throw CapacityError("scale recovery supports at most 8 sites");

  ScaleRecovery out;
  const Eigen::VectorXd dir = direction / dn;
  const EigenSystem eig =
      diagonalize(assemble(HamiltonianSpec{basis, dir}, policy), policy);
  const Eigen::VectorXcd a0 = eig.vectors.adjoint() * pair.initial.amplitudes;
  const Eigen::VectorXcd at = eig.vectors.adjoint() * pair.evolved.amplitudes;

  // Reference levels: the widest energy spacing among occupied levels.
  int lo = -1, hi = -1;
  for (Eigen::Index k = 0; k < a0.size(); ++k) {
    if (std::abs(a0[k]) <= options.support_floor) continue;
    if (lo < 0 || eig.energies[k] < eig.energies[lo]) lo = int(k);
    if (hi < 0 || eig.energies[k] > eig.energies[hi]) hi = int(k);
  }
  if (lo < 0 || hi < 0 || lo == hi) {
    out.diagnostic =
        "insufficient initial-state support: fewer than two occupied levels";
    return out;
  }
  const double de = eig.energies[hi] - eig.energies[lo];
  if (de < options.degeneracy_floor) {
    out.diagnostic = "degenerate spectrum: occupied level spacing below floor";
    return out;
  }

  // Phase of e^{-i s E t} between the reference levels, known mod 2 pi.
  const cd ratio = (at[hi] / a0[hi]) * std::conj(at[lo] / a0[lo]);
  const double dphi = std::arg(ratio);  // = -s * de * t mod 2 pi

  const double two_pi = 2.0 * std::numbers::pi;
  long p_max =
      options.max_winding > 0
          ? options.max_winding
          : static_cast<long>(
                std::ceil(options.max_scale * de * pair.time / two_pi)) + 2;
  p_max = std::min(p_max, 1000000L);

  std::vector<double> valid;
  for (long p = -p_max; p <= p_max; ++p) {
    const double s = (-dphi + two_pi * double(p)) / (de * pair.time);
    if (std::abs(s) > options.max_scale || std::abs(s) < 1e-12) continue;
    cd overlap = 0.0;
    for (Eigen::Index k = 0; k < a0.size(); ++k)
      overlap += std::conj(std::polar(1.0, -s * eig.energies[k] * pair.time) *
                           a0[k]) *
                 at[k];
    if (1.0 - std::abs(overlap) <= options.overlap_tol) valid.push_back(s);
  }

  if (valid.empty()) {
    out.diagnostic =
        "no scale candidate reproduces the final state within tolerance";
    return out;
  }
  if (valid.size() > 1) {
    out.diagnostic = "ambiguous scale: " + std::to_string(valid.size()) +
                     " candidates reproduce the final state (near recurrence)";
    return out;
  }
  out.ok = true;
  out.scale = std::abs(valid[0]);
  out.oriented_direction = valid[0] < 0.0 ? Eigen::VectorXd(-dir) : dir;
  return out;
}

}  // namespace qtomo
