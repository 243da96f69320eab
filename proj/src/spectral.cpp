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

#include "qtomo/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <utility>
#include <vector>

#include <json.hpp>

namespace qtomo {

namespace {

// Coefficients whose square cannot move the completeness sum at double
// precision are dropped from the expansion map.
constexpr double kCoeffFloor = 1e-12;

void check_register(const OperatorBasis& basis, const EigenSystem& eig) {
  if (basis.size() < 1) throw ValidationError("operator basis is empty");
  if (basis.site_count() != eig.site_count)
    throw ValidationError("eigensystem acts on a different register");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

}  // namespace

Eigen::MatrixXd covariance_estimate(const OperatorBasis& basis,
                                    const EigenSystem& eig, double time,
                                    const EnsembleSpec& ensemble, int samples,
                                    const NumericsPolicy& policy) {
  check_register(basis, eig);
  if (ensemble.site_count != basis.site_count())
    throw ValidationError("ensemble acts on a different register");
  if (samples < 1) throw ValidationError("covariance needs >= 1 sample");

  const int n = basis.size();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (int i = 0; i < samples; ++i) {
    const StateVector initial = sample_state(ensemble, std::uint64_t(i));
    const StateVector evolved = evolve(initial, eig, time);
    for (int alpha = 0; alpha < n; ++alpha)
      row[alpha] = expectation(initial, basis.term(alpha), policy) -
                   expectation(evolved, basis.term(alpha), policy);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(row);
  }
  acc /= double(samples);
  return symmetrized(Eigen::MatrixXd(acc.selfadjointView<Eigen::Lower>()));
}

OperatorExpansion expand_operator(int alpha, const OperatorBasis& basis,
                                  const EigenSystem& eig, double time,
                                  const NumericsPolicy& policy) {
  check_register(basis, eig);
  if (alpha < 0 || alpha >= basis.size())
    throw ValidationError("operator index out of range");
  const int sites = basis.site_count();
  if (sites > policy.expansion_max_sites)
    throw CapacityError("operator expansion supports at most " +
                        std::to_string(policy.expansion_max_sites) +
                        " sites; got " + std::to_string(sites));

  const Eigen::Index dim = Eigen::Index{1} << sites;
  policy.check_dense(std::uint64_t(dim), "operator expansion");

  // Heisenberg image in the computational basis via the eigensystem:
  // O(t) = V diag(e^{+iEt}) V^dag O V diag(e^{-iEt}) V^dag.
  Eigen::MatrixXcd ov(dim, dim);
  {
    Eigen::VectorXcd col(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      apply_string(basis.term(alpha), eig.vectors.col(k), col);
      ov.col(k) = col;
    }
  }
  Eigen::MatrixXcd in_eig = eig.vectors.adjoint() * ov;
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index k = 0; k < dim; ++k)
      in_eig(j, k) *= std::polar(1.0, (eig.energies[j] - eig.energies[k]) * time);
  const Eigen::MatrixXcd image = eig.vectors * in_eig * eig.vectors.adjoint();

  OperatorExpansion out;
  out.source_index = alpha;

  // Tr(P O(t)) walks the single nonzero of each P row: P|m> = c_m |m ^ x>,
  // and applying P to the all-ones vector collects every c_m at once.
  const std::uint64_t strings = std::uint64_t{1} << sites;
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(dim);
  Eigen::VectorXcd amps(dim);
  for (std::uint64_t x = 0; x < strings; ++x) {
    for (std::uint64_t z = 0; z < strings; ++z) {
      if (x == 0 && z == 0) continue;
      const PauliString p = PauliString::from_masks(sites, x, z);
      apply_string(p, ones, amps);
      std::complex<double> trace = 0.0;
      for (Eigen::Index m = 0; m < dim; ++m) {
        const Eigen::Index flipped = m ^ Eigen::Index(x);
        trace += amps[flipped] * image(m, flipped);
      }
      const std::complex<double> coeff = trace / double(dim);
      if (std::abs(coeff.imag()) >
          policy.correlation_imag_tol * std::max(1.0, std::abs(coeff)))
        throw ValidationError("expansion coefficient has imaginary residue");
      out.completeness += coeff.real() * coeff.real();
      if (std::abs(coeff.real()) > kCoeffFloor)
        out.coefficients[{x, z}] = coeff.real();
    }
  }
  return out;
}

StructuralParts structural_decomposition(
    const std::vector<OperatorExpansion>& expansions,
    const OperatorBasis& basis) {
  const int n = basis.size();
  if (n < 1) throw ValidationError("operator basis is empty");
  if (static_cast<int>(expansions.size()) != n)
    throw ValidationError("need exactly one expansion per basis operator");
  for (int alpha = 0; alpha < n; ++alpha)
    if (expansions[alpha].source_index != alpha)
      throw ValidationError("expansions are out of order");

  std::map<std::pair<std::uint64_t, std::uint64_t>, int> ansatz;
  for (int a = 0; a < n; ++a) {
    const auto key = basis.term(a).body_key();
    if (!ansatz.emplace(key, a).second)
      throw ValidationError("operator basis repeats a string body");
  }

  Eigen::VectorXd weights(n);
  for (int a = 0; a < n; ++a)
    weights[a] = std::pow(1.0 / 3.0, basis.term(a).size());

  StructuralParts parts;
  parts.mixing = Eigen::MatrixXd::Zero(n, n);
  parts.complement = Eigen::MatrixXd::Zero(n, n);

  std::map<std::pair<std::uint64_t, std::uint64_t>, Eigen::VectorXd> outside;
  for (int alpha = 0; alpha < n; ++alpha) {
    for (const auto& [key, val] : expansions[alpha].coefficients) {
      const auto hit = ansatz.find(key);
      if (hit != ansatz.end()) {
        parts.mixing(hit->second, alpha) = val;
      } else {
        outside.try_emplace(key, Eigen::VectorXd::Zero(n)).first->second[alpha] =
            val;
      }
    }
  }

  const Eigen::MatrixXd residual =
      Eigen::MatrixXd::Identity(n, n) - parts.mixing;
  parts.projected =
      symmetrized(residual.transpose() * weights.asDiagonal() * residual);

  for (const auto& [key, col] : outside) {
    const double w =
        std::pow(1.0 / 3.0, std::popcount(key.first | key.second));
    parts.complement.selfadjointView<Eigen::Lower>().rankUpdate(col, w);
  }
  parts.complement = symmetrized(
      Eigen::MatrixXd(parts.complement.selfadjointView<Eigen::Lower>()));
  return parts;
}

double gap_lower_bound(const Eigen::MatrixXd& mixing, int max_string_size) {
  if (mixing.rows() != mixing.cols())
    throw ValidationError("mixing matrix must be square");
  if (mixing.rows() < 2)
    throw ValidationError("gap bound needs >= 2 operators");
  if (max_string_size < 1)
    throw ValidationError("maximum string size must be >= 1");
  const Eigen::MatrixXd residual =
      Eigen::MatrixXd::Identity(mixing.rows(), mixing.cols()) - mixing;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  // Singular values descend; the second-smallest sits one before the end.
  const double s2 = svd.singularValues()[mixing.rows() - 2];
  return std::pow(1.0 / 3.0, 0.5 * max_string_size) * s2;
}

Eigen::MatrixXd eth_late_time_matrix(const Eigen::VectorXd& couplings) {
  const double norm = couplings.norm();
  if (couplings.size() < 1 || norm == 0.0)
    throw ValidationError("late-time projector needs nonzero couplings");
  const Eigen::VectorXd unit = couplings / norm;
  return unit * unit.transpose();
}

Eigen::VectorXd haar_reference(const OperatorBasis& basis,
                               const EigenSystem& eig, double time,
                               std::uint64_t seed, int samples,
                               const NumericsPolicy& policy) {
  check_register(basis, eig);
  if (samples < 1) throw ValidationError("reference needs >= 1 sample");

  const EnsembleSpec ensemble{EnsembleKind::haar, basis.site_count(), seed};
  const int n = basis.size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < samples; ++i) {
    const StateVector initial = sample_state(ensemble, std::uint64_t(i));
    const StateVector evolved = evolve(initial, eig, time);
    for (int alpha = 0; alpha < n; ++alpha) {
      const double d = expectation(initial, basis.term(alpha), policy) -
                       expectation(evolved, basis.term(alpha), policy);
      acc[alpha] += d * d;
    }
  }
  return acc / double(samples);
}

GapReport make_gap_report(const Eigen::MatrixXd& covariance,
                          const Eigen::MatrixXd& mixing, int max_string_size) {
  if (covariance.rows() != covariance.cols())
    throw ValidationError("covariance must be square");
  if (covariance.rows() < 2)
    throw ValidationError("gap report needs >= 2 operators");
  if (max_string_size < 1)
    throw ValidationError("maximum string size must be >= 1");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-9 * scale)
    throw ValidationError("covariance must be symmetric");

  GapReport report;
  report.covariance = covariance;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
  report.eigenvalues = es.eigenvalues();
  const double s1 = std::sqrt(std::max(0.0, report.eigenvalues[0]));
  const double s2 = std::sqrt(std::max(0.0, report.eigenvalues[1]));
  report.gap = s2 - s1;
  report.lower_bound =
      mixing.size() == 0 ? 0.0 : gap_lower_bound(mixing, max_string_size);
  report.eth_floor = std::pow(1.0 / 3.0, 0.5 * max_string_size);
  return report;
}

std::string gap_report_json(const GapReport& report) {
  nlohmann::json j;
  j["operators"] = static_cast<int>(report.eigenvalues.size());
  j["eigenvalues"] = std::vector<double>(
      report.eigenvalues.data(),
      report.eigenvalues.data() + report.eigenvalues.size());
  std::vector<double> singular;
  singular.reserve(report.eigenvalues.size());
  for (Eigen::Index k = 0; k < report.eigenvalues.size(); ++k)
    singular.push_back(std::sqrt(std::max(0.0, report.eigenvalues[k])));
  j["singular_values"] = singular;
  j["gap"] = report.gap;
  j["lower_bound"] = report.lower_bound;
  j["eth_floor"] = report.eth_floor;
  return j.dump(2);
}

Histogram make_histogram(const Eigen::VectorXd& values, int bins, double lo,
                         double hi) {
  if (bins < 1) throw ValidationError("histogram needs >= 1 bin");
  if (!(lo < hi)) throw ValidationError("histogram range must be ascending");

  Histogram h;
  h.edges.resize(std::size_t(bins) + 1);
  for (int k = 0; k <= bins; ++k)
    h.edges[std::size_t(k)] = lo + (hi - lo) * double(k) / double(bins);
  h.edges.back() = hi;
  h.counts.assign(std::size_t(bins), 0);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (v < lo) {
      ++h.below;
    } else if (v >= hi) {
      ++h.above;
    } else {
      const int k = std::min(bins - 1,
                             int((v - lo) / (hi - lo) * double(bins)));
      ++h.counts[std::size_t(k)];
    }
  }
  return h;
}

void write_histogram_csv(const Histogram& h, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open " + path + " for writing");
  out << "lo,hi,count\n";
  char buf[96];
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%d\n", h.edges[k],
                  h.edges[k + 1], h.counts[k]);
    out << buf;
  }
}

}  // namespace qtomo
