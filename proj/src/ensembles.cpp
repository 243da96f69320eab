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

#include "qtomo/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "qtomo/rng.hpp"

namespace qtomo {

namespace {

using cd = std::complex<double>;

constexpr int kMaxSampledSites = 30;

// Appends one site in state `spinor`; the new site occupies the next
// amplitude bit, so appending sites 0..L-1 in order matches the bit layout.
void append_site(Eigen::VectorXcd& v, const cd spinor[2]) {
  const Eigen::Index size = v.size();
  Eigen::VectorXcd out(2 * size);
  out.head(size) = spinor[0] * v;
  out.tail(size) = spinor[1] * v;
  v = std::move(out);
}

void draw_bloch_spinor(RandomStream& rng, cd spinor[2]) {
  const double z = rng.uniform(-1.0, 1.0);  // uniform on the sphere
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  spinor[0] = std::sqrt((1.0 + z) / 2.0);
  spinor[1] = std::polar(std::sqrt((1.0 - z) / 2.0), phi);
}

void check_sample_sites(int site_count) {
  if (site_count < 1 || site_count > kMaxSampledSites)
    throw ValidationError("ensemble site count " + std::to_string(site_count) +
                          " outside [1, " + std::to_string(kMaxSampledSites) +
                          "]");
}

std::vector<std::pair<int, int>> chain_bonds(int site_count,
                                             Boundary boundary) {
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < site_count; ++i) bonds.emplace_back(i, i + 1);
  if (boundary == Boundary::periodic) bonds.emplace_back(site_count - 1, 0);
  return bonds;
}

PauliString two_site(int site_count, int i, PauliLetter a, int j,
                     PauliLetter b) {
  return PauliString::single(site_count, i, a) *
         PauliString::single(site_count, j, b);
}

// One group of strings per independent coupling. Uniform families group the
// translates of a term type; random families have singleton groups, which
// lets instantiation share one expansion path.
struct FamilyLayout {
  std::vector<std::vector<PauliString>> groups;
  std::vector<std::string> names;
  bool uniform = false;
};

std::vector<PauliString> bond_type(int L, Boundary boundary, PauliLetter a,
                                   PauliLetter b) {
  std::vector<PauliString> out;
  for (const auto& [i, j] : chain_bonds(L, boundary))
    out.push_back(two_site(L, i, a, j, b));
  return out;
}

std::vector<PauliString> site_type(int L, PauliLetter a) {
  std::vector<PauliString> out;
  for (int i = 0; i < L; ++i) out.push_back(PauliString::single(L, i, a));
  return out;
}

FamilyLayout family_layout(const ModelSpec& spec) {
  const int L = spec.site_count;
  const char* family = to_string(spec.family);
  if (L < 2)
    throw ValidationError(std::string(family) + " needs at least 2 sites");

  FamilyLayout layout;
  switch (spec.family) {
    case ModelFamily::tfim_yy: {
      if (spec.boundary != Boundary::periodic)
        throw ValidationError(
            "tfim_yy wraps next-nearest terms and requires periodic "
            "boundaries");
      if (L < 3)
        throw ValidationError("tfim_yy needs at least 3 sites");
      if (L == 4)
        throw ValidationError(
            "tfim_yy is undefined at 4 sites: distance-2 YY translates "
            "collide pairwise");
      std::vector<PauliString> yy;
      for (int i = 0; i < L; ++i)
        yy.push_back(two_site(L, i, PauliLetter::Y, (i + 2) % L,
                              PauliLetter::Y));
      layout.groups = {bond_type(L, spec.boundary, PauliLetter::Z,
                                 PauliLetter::Z),
                       site_type(L, PauliLetter::X), std::move(yy)};
      layout.names = {"ZZ", "X", "YY"};
      layout.uniform = true;
      break;
    }
    case ModelFamily::ising_lt:
      layout.groups = {bond_type(L, spec.boundary, PauliLetter::Z,
                                 PauliLetter::Z),
                       site_type(L, PauliLetter::X),
                       site_type(L, PauliLetter::Z)};
      layout.names = {"ZZ", "X", "Z"};
      layout.uniform = true;
      break;
    case ModelFamily::heisenberg:
      layout.groups = {bond_type(L, spec.boundary, PauliLetter::X,
                                 PauliLetter::X),
                       bond_type(L, spec.boundary, PauliLetter::Y,
                                 PauliLetter::Y),
                       bond_type(L, spec.boundary, PauliLetter::Z,
                                 PauliLetter::Z)};
      layout.names = {"XX", "YY", "ZZ"};
      layout.uniform = true;
      break;
    case ModelFamily::random_tfim: {
      for (const auto& s : site_type(L, PauliLetter::X))
        layout.groups.push_back({s});
      for (const auto& s :
           bond_type(L, spec.boundary, PauliLetter::Z, PauliLetter::Z))
        layout.groups.push_back({s});
      break;
    }
    case ModelFamily::random_local: {
      for (int i = 0; i < L; ++i)
        for (auto a : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z})
          layout.groups.push_back({PauliString::single(L, i, a)});
      for (const auto& [i, j] : chain_bonds(L, spec.boundary))
        for (auto a : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z})
          for (auto b : {PauliLetter::X, PauliLetter::Y, PauliLetter::Z})
            layout.groups.push_back({two_site(L, i, a, j, b)});
      break;
    }
  }
  if (!layout.uniform)
    for (const auto& group : layout.groups)
      layout.names.push_back(group.front().str());
  return layout;
}

}  // namespace

StateVector sample_state(const EnsembleSpec& spec, std::uint64_t index) {
  check_sample_sites(spec.site_count);
  const Eigen::Index dim = Eigen::Index{1} << spec.site_count;
  StateVector state;
  state.site_count = spec.site_count;

  switch (spec.kind) {
    case EnsembleKind::bloch_product: {
      RandomStream rng(spec.seed, kStreamBloch, index);
      Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
      for (int site = 0; site < spec.site_count; ++site) {
        cd spinor[2];
        draw_bloch_spinor(rng, spinor);
        append_site(v, spinor);
      }
      state.amplitudes = std::move(v);
      break;
    }
    case EnsembleKind::xyz_product: {
      static const cd kAxisStates[6][2] = {
          {std::sqrt(0.5), std::sqrt(0.5)},        // X+
          {std::sqrt(0.5), -std::sqrt(0.5)},       // X-
          {std::sqrt(0.5), cd(0.0, std::sqrt(0.5))},   // Y+
          {std::sqrt(0.5), cd(0.0, -std::sqrt(0.5))},  // Y-
          {1.0, 0.0},                              // Z+
          {0.0, 1.0}};                             // Z-
      RandomStream rng(spec.seed, kStreamXyz, index);
      Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
      for (int site = 0; site < spec.site_count; ++site) {
        const int pick = std::min(5, static_cast<int>(rng.next_double() * 6));
        append_site(v, kAxisStates[pick]);
      }
      state.amplitudes = std::move(v);
      break;
    }
    case EnsembleKind::haar: {
      RandomStream rng(spec.seed, kStreamHaar, index);
      Eigen::VectorXcd v(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double re = rng.normal();
        const double im = rng.normal();
        v[i] = cd(re, im);
      }
      state.amplitudes = v / v.norm();
      break;
    }
  }
  return state;
}

StateVector translation_invariant_bloch_state(int site_count,
                                              std::uint64_t seed,
                                              std::uint64_t index) {
  check_sample_sites(site_count);
  RandomStream rng(seed, kStreamBloch, index);
  cd spinor[2];
  draw_bloch_spinor(rng, spinor);
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(1);
  for (int site = 0; site < site_count; ++site) append_site(v, spinor);
  return StateVector{std::move(v), site_count};
}

int coupling_count(const ModelSpec& spec) {
  return static_cast<int>(family_layout(spec).groups.size());
}

OperatorBasis model_basis(const ModelSpec& spec) {
  std::vector<PauliString> terms;
  for (const auto& group : family_layout(spec).groups)
    terms.insert(terms.end(), group.begin(), group.end());
  return OperatorBasis::from_strings(std::move(terms));
}

Eigen::VectorXd family_couplings(const ModelSpec& spec) {
  if (!(spec.range.lo < spec.range.hi))
    throw ValidationError("coupling range is empty");
  const int n = coupling_count(spec);
  RandomStream rng(spec.coupling_seed, kStreamCouplings, 0);
  Eigen::VectorXd c(n);
  for (int k = 0; k < n; ++k) c[k] = rng.uniform(spec.range.lo, spec.range.hi);
  return c;
}

HamiltonianSpec instantiate_model(const ModelSpec& spec) {
  const FamilyLayout layout = family_layout(spec);
  const Eigen::VectorXd types = family_couplings(spec);

  std::vector<PauliString> terms;
  std::vector<double> couplings;
  for (std::size_t g = 0; g < layout.groups.size(); ++g) {
    for (const auto& s : layout.groups[g]) {
      terms.push_back(s);
      couplings.push_back(types[static_cast<Eigen::Index>(g)]);
    }
  }
  return make_hamiltonian(
      OperatorBasis::from_strings(std::move(terms)),
      Eigen::Map<const Eigen::VectorXd>(couplings.data(),
                                        static_cast<Eigen::Index>(
                                            couplings.size())));
}

GroupedBasis translated_sum_basis(const ModelSpec& spec) {
  FamilyLayout layout = family_layout(spec);
  if (!layout.uniform)
    throw ValidationError(
        std::string(to_string(spec.family)) +
        " has site-dependent couplings; translated sums are undefined");
  return GroupedBasis{std::move(layout.groups), std::move(layout.names),
                      spec.site_count};
}

const char* to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::bloch_product: return "bloch_product";
    case EnsembleKind::xyz_product: return "xyz_product";
    case EnsembleKind::haar: return "haar";
  }
  throw ValidationError("unknown ensemble kind");
}

const char* to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::tfim_yy: return "tfim_yy";
    case ModelFamily::ising_lt: return "ising_lt";
    case ModelFamily::heisenberg: return "heisenberg";
    case ModelFamily::random_tfim: return "random_tfim";
    case ModelFamily::random_local: return "random_local";
  }
  throw ValidationError("unknown model family");
}

const char* to_string(Boundary boundary) {
  switch (boundary) {
    case Boundary::open: return "open";
    case Boundary::periodic: return "periodic";
  }
  throw ValidationError("unknown boundary");
}

EnsembleKind ensemble_kind_from_string(const std::string& s) {
  for (auto k : {EnsembleKind::bloch_product, EnsembleKind::xyz_product,
                 EnsembleKind::haar})
    if (s == to_string(k)) return k;
  throw ValidationError("unknown ensemble kind '" + s + "'");
}

ModelFamily model_family_from_string(const std::string& s) {
  for (auto f : {ModelFamily::tfim_yy, ModelFamily::ising_lt,
                 ModelFamily::heisenberg, ModelFamily::random_tfim,
                 ModelFamily::random_local})
    if (s == to_string(f)) return f;
  throw ValidationError("unknown model family '" + s + "'");
}

Boundary boundary_from_string(const std::string& s) {
  for (auto b : {Boundary::open, Boundary::periodic})
    if (s == to_string(b)) return b;
  throw ValidationError("unknown boundary '" + s + "'");
}

}  // namespace qtomo
