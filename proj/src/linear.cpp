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

#include "qtomo/linear.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "qtomo/rng.hpp"

namespace qtomo {

namespace {

// Two smallest singular values collapse below this: the kernel direction is
// not unique and the estimate is reported as ambiguous.
constexpr double kDegeneracyTol = 1e-12;

// Headroom for "error within bound" checks so an exactly-zero bound still
// accepts an exact reconstruction.
constexpr double kBoundSlack = 1e-7;

// Full spectrum of sqrt(M'M) for a p x n matrix: n values (descending),
// zero-padded when p < n, plus the full right singular basis.
struct KernelSvd {
  Eigen::VectorXd values;  // descending, length n
  Eigen::MatrixXd right;   // n x n
};

KernelSvd kernel_svd(const Eigen::MatrixXd& entries) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      entries, Eigen::ComputeFullV);
  const Eigen::Index n = entries.cols();
  KernelSvd out;
  out.values = Eigen::VectorXd::Zero(n);
  out.values.head(svd.singularValues().size()) = svd.singularValues();
  out.right = svd.matrixV();
  return out;
}

void fix_sign(Eigen::VectorXd& v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  if (v[at] < 0.0) v = -v;
}

}  // namespace

ConstraintMatrix build_constraint_matrix(const OperatorBasis& basis,
                                         const std::vector<QuenchPair>& pairs,
                                         const NumericsPolicy& policy) {
  if (pairs.empty()) throw ValidationError("constraint matrix needs >= 1 pair");
  const int n = basis.size();
  ConstraintMatrix m;
  m.entries.resize(static_cast<Eigen::Index>(pairs.size()), n);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const QuenchPair& pair = pairs[i];
    if (pair.initial.site_count != basis.site_count() ||
        pair.evolved.site_count != basis.site_count())
      throw ValidationError("quench pair acts on a different register");
    for (int a = 0; a < n; ++a) {
      m.entries(static_cast<Eigen::Index>(i), a) =
          expectation(pair.initial, basis.term(a), policy) -
          expectation(pair.evolved, basis.term(a), policy);
    }
  }
  return m;
}

ConstraintMatrix inject_error(const ConstraintMatrix& clean,
                              const ErrorModel& em) {
  if (em.epsilon < 0.0) throw ValidationError("noise level must be >= 0");
  ConstraintMatrix noisy = clean;
  noisy.noise = em;
  if (em.epsilon == 0.0) return noisy;
  RandomStream rng(em.seed, kStreamNoise, 0);
  for (Eigen::Index i = 0; i < noisy.entries.rows(); ++i)
    for (Eigen::Index a = 0; a < noisy.entries.cols(); ++a)
      noisy.entries(i, a) += rng.uniform(-em.epsilon, em.epsilon);
  return noisy;
}

ReconstructionResult solve_kernel(const ConstraintMatrix& m) {
  const Eigen::Index n = m.entries.cols();
  if (n < 2) throw ValidationError("kernel estimation needs >= 2 operators");
  const KernelSvd svd = kernel_svd(m.entries);

  ReconstructionResult r;
  r.estimate = svd.right.col(n - 1);
  fix_sign(r.estimate);
  r.singular_values = svd.values / std::sqrt(double(m.pairs()));
  r.gap = r.singular_values[n - 2] - r.singular_values[n - 1];
  r.ambiguous_kernel = r.gap < kDegeneracyTol;
  return r;
}

Score score(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size())
    throw ValidationError("scored vectors differ in length");
  const double tn = truth.norm();
  const double en = estimate.norm();
  if (tn == 0.0 || en == 0.0)
    throw ValidationError("cannot score against a zero vector");
  const Eigen::VectorXd u = estimate / en;
  const Eigen::VectorXd v = truth / tn;
  const double d = u.dot(v);
  // cos and sin from one orthogonal decomposition, so F^2 + E^2 = |u|^2 = 1.
  const double s = (u - d * v).norm();
  Score out;
  out.fidelity = std::min(std::abs(d), 1.0);
  out.error = std::min(s, 1.0);
  out.angle = std::atan2(s, std::abs(d));
  return out;
}

void score_against(ReconstructionResult& result, const Eigen::VectorXd& truth) {
  const Score s = score(result.estimate, truth);
  result.fidelity = s.fidelity;
  result.error = s.error;
  result.angle = s.angle;
}

double singular_gap(const ConstraintMatrix& m) {
  const Eigen::Index n = m.entries.cols();
  if (n < 2) throw ValidationError("singular gap needs >= 2 operators");
  const KernelSvd svd = kernel_svd(m.entries);
  return (svd.values[n - 2] - svd.values[n - 1]) /
         std::sqrt(double(m.pairs()));
}

ErrorBoundReport error_bound_report(double mean_error, double gap,
                                    const ErrorModel& em, int operators,
                                    int pairs) {
  if (operators < 1 || pairs < 1)
    throw ValidationError("bound report needs positive dimensions");
  ErrorBoundReport r;
  r.measured = mean_error;
  r.applicable = gap > 0.0 && em.epsilon < gap;
  r.bound = r.applicable
                ? std::sqrt(double(operators) / double(pairs)) * em.epsilon / gap
                : 0.0;
  r.ratio = r.bound > 0.0 ? mean_error / r.bound : 0.0;
  return r;
}

double log_log_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw ValidationError("slope needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    if (x <= 0.0 || y <= 0.0)
      throw ValidationError("log-log regression needs positive coordinates");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double n = double(points.size());
  const double denom = sxx - sx * sx / n;
  if (denom <= 0.0) throw ValidationError("slope needs distinct abscissae");
  return (sxy - sx * sy / n) / denom;
}

RobustnessRecord robustness_experiment(const AnsatzSplit& split,
                                       const std::vector<QuenchPair>& pairs,
                                       const std::optional<ErrorModel>& em,
                                       const NumericsPolicy& policy) {
  const OperatorBasis& kept = split.kept.basis;
  const OperatorBasis& extra = split.extra.basis;
  if (kept.site_count() != extra.site_count())
    throw ValidationError("kept and extra bases act on different registers");
  for (const auto& s : extra.terms())
    if (kept.index_of_body(s))
      throw ValidationError("kept and extra bases overlap: " + s.str());

  ConstraintMatrix m = build_constraint_matrix(kept, pairs, policy);
  const ConstraintMatrix mp = build_constraint_matrix(extra, pairs, policy);
  if (em) m = inject_error(m, *em);

  ReconstructionResult r = solve_kernel(m);
  score_against(r, split.kept.couplings);

  const double root_p = std::sqrt(double(m.pairs()));
  RobustnessRecord rec;
  rec.error = r.error;
  rec.s2 = r.singular_values[r.singular_values.size() - 2];
  rec.extra_norm =
      Eigen::JacobiSVD<Eigen::MatrixXd>(mp.entries).singularValues()[0] /
      root_p;

  const double kept_norm = split.kept.couplings.norm();
  const double extra_norm_c = split.extra.couplings.norm();
  if (kept_norm == 0.0)
    throw ValidationError("kept couplings must be nonzero");
  rec.bound = rec.s2 > 0.0
                  ? rec.extra_norm * extra_norm_c / (rec.s2 * kept_norm)
                  : std::numeric_limits<double>::infinity();

  ConstraintMatrix combined;
  combined.entries.resize(m.entries.rows(),
                          m.entries.cols() + mp.entries.cols());
  combined.entries << m.entries, mp.entries;
  rec.total_gap = singular_gap(combined);
  rec.within_bound = rec.error <= rec.bound + kBoundSlack;
  return rec;
}

ConstraintMatrix time_slice_baseline(const OperatorBasis& basis,
                                     const EigenSystem& eig,
                                     const StateVector& initial, double dt,
                                     int pairs, const NumericsPolicy& policy) {
  if (dt <= 0.0) throw ValidationError("slice spacing must be positive");
  if (pairs < 1) throw ValidationError("baseline needs >= 1 slice");
  std::vector<QuenchPair> slices;
  slices.reserve(pairs);
  for (int k = 0; k < pairs; ++k)
    slices.push_back(
        make_quench_pair(evolve(initial, eig, k * dt), eig, dt));
  return build_constraint_matrix(basis, slices, policy);
}

void write_constraint_csv(const ConstraintMatrix& m, const OperatorBasis& basis,
                          const std::string& path) {
  if (basis.size() != m.operators())
    throw ValidationError("basis size does not match matrix columns");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for write");
  const auto names = basis.names();
  for (std::size_t a = 0; a < names.size(); ++a)
    out << (a ? "," : "") << names[a];
  out << "\n";
  char buf[32];
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i) {
    for (Eigen::Index a = 0; a < m.entries.cols(); ++a) {
      std::snprintf(buf, sizeof buf, "%.12g", m.entries(i, a));
      out << (a ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace qtomo
