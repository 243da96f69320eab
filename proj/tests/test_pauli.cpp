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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <vector>

#include "qtomo/pauli.hpp"
#include "qtomo/rng.hpp"

using namespace qtomo;
using cplx = std::complex<double>;

namespace {

// Independent oracle: dense matrix built by Kronecker products of explicit
// 2x2 letter matrices. Site 0 is the least significant bit, so it is the
// rightmost factor in the product.
Eigen::Matrix2cd letter_matrix(PauliLetter l) {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd m;
  switch (l) {
    case PauliLetter::I: m << 1, 0, 0, 1; break;
    case PauliLetter::X: m << 0, 1, 1, 0; break;
    case PauliLetter::Y: m << 0, -i, i, 0; break;
    case PauliLetter::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

Eigen::MatrixXcd oracle_matrix(const PauliString& s) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (int site = s.site_count() - 1; site >= 0; --site)
    m = kron(m, letter_matrix(s.letter(site)));
  return s.phase() * m;
}

PauliString random_string(int sites, RandomStream& rng) {
  std::vector<PauliLetter> letters(sites);
  for (auto& l : letters)
    l = static_cast<PauliLetter>(rng.next_u64() % 4);
  return PauliString::from_letters(letters, static_cast<int>(rng.next_u64() % 4));
}

}  // namespace

TEST_CASE("single-site products follow the Levi-Civita table") {
  const auto x0 = PauliString::parse("X0", 1);
  const auto y0 = PauliString::parse("Y0", 1);
  const auto z0 = PauliString::parse("Z0", 1);

  auto xy = x0 * y0;
  CHECK(xy.same_body(z0));
  CHECK(xy.phase() == cplx(0, 1));

  auto yx = y0 * x0;
  CHECK(yx.same_body(z0));
  CHECK(yx.phase() == cplx(0, -1));

  auto zz = z0 * z0;
  CHECK(zz.is_identity_body());
  CHECK(zz.phase() == cplx(1, 0));
}

TEST_CASE("multi-site product accumulates per-site phases") {
  const auto zz = PauliString::parse("Z0 Z1", 2);
  const auto x0 = PauliString::parse("X0", 2);
  const auto prod = zz * x0;
  CHECK(prod == PauliString::parse("+i Y0 Z1", 2));
}

TEST_CASE("commutation via the symplectic form") {
  const auto zz = PauliString::parse("Z0 Z1", 2);
  const auto xx = PauliString::parse("X0 X1", 2);
  CHECK(zz.commutes_with(xx));  // two anticommuting sites cancel

  const auto zi = PauliString::parse("Z0", 2);
  CHECK_FALSE(zi.commutes_with(xx));
  CHECK(zi.commutes_with(PauliString::parse("Z1", 2)));
}

TEST_CASE("string size counts non-identity sites") {
  CHECK(PauliString::parse("X0 Y2 Z5", 6).size() == 3);
  CHECK(PauliString::identity(6).size() == 0);
  CHECK(PauliString::parse("Z3", 6).size() == 1);
}

TEST_CASE("Z0 on two sites is diag(1,-1,1,-1)") {
  const auto m = PauliString::parse("Z0", 2).to_matrix();
  Eigen::VectorXcd expected(4);
  expected << 1, -1, 1, -1;
  CHECK((m - Eigen::MatrixXcd(expected.asDiagonal())).norm() == 0.0);
}

TEST_CASE("dense matrix agrees with the Kronecker oracle") {
  RandomStream rng(11, kStreamSolver, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int sites = 1 + static_cast<int>(rng.next_u64() % 3);
    const auto s = random_string(sites, rng);
    CHECK((s.to_matrix() - oracle_matrix(s)).norm() < 1e-14);
  }
}

TEST_CASE("bitmask product matches dense matrix product") {
  RandomStream rng(12, kStreamSolver, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int sites = 1 + static_cast<int>(rng.next_u64() % 3);
    const auto a = random_string(sites, rng);
    const auto b = random_string(sites, rng);
    const auto ab = a * b;
    const Eigen::MatrixXcd direct = oracle_matrix(a) * oracle_matrix(b);
    CHECK((ab.to_matrix() - direct).norm() < 1e-13);
    CHECK(a.commutes_with(b) ==
          ((direct - oracle_matrix(b) * oracle_matrix(a)).norm() < 1e-13));
  }
}

TEST_CASE("Hermitian strings square to the identity") {
  RandomStream rng(13, kStreamSolver, 0);
  for (int trial = 0; trial < 40; ++trial) {
    auto s = random_string(4, rng).with_phase(0);
    if (rng.next_double() < 0.5) s = s.with_phase(2);
    REQUIRE(s.is_hermitian());
    const auto sq = s * s;
    CHECK(sq.is_identity_body());
    CHECK(sq.phase() == cplx(1, 0));
  }
}

TEST_CASE("normalized trace product is the orthonormality form") {
  RandomStream rng(14, kStreamSolver, 0);
  std::vector<PauliString> pool;
  for (int k = 0; k < 12; ++k) pool.push_back(random_string(3, rng).with_phase(0));
  for (const auto& a : pool) {
    for (const auto& b : pool) {
      const cplx got = normalized_trace_product(a, b);
      const cplx want = (oracle_matrix(a) * oracle_matrix(b)).trace() / 8.0;
      CHECK(std::abs(got - want) < 1e-14);
      if (a.same_body(b))
        CHECK(std::abs(got - cplx(1, 0)) < 1e-15);
      else
        CHECK(std::abs(got) < 1e-15);
    }
  }
}

TEST_CASE("textual round trip and phase tags") {
  const int sites = 6;
  for (const auto* text : {"X0 Z3", "I", "Y1", "+i X0 Y1", "-1 Z5", "-i X2 Y3 Z4"}) {
    const auto s = PauliString::parse(text, sites);
    CHECK(PauliString::parse(s.str(), sites) == s);
  }
  CHECK(PauliString::parse("X0 Z3", sites).str() == "X0 Z3");
  CHECK(PauliString::identity(sites).str() == "I");
  CHECK(PauliString::parse("+1 X0", sites) == PauliString::parse("X0", sites));
  // Sites print in ascending order regardless of input order.
  CHECK(PauliString::parse("Z3 X0", sites).str() == "X0 Z3");
}

TEST_CASE("parse rejects malformed text") {
  CHECK_THROWS_AS(PauliString::parse("X0 X0", 2), ValidationError);
  CHECK_THROWS_AS(PauliString::parse("X5", 2), ValidationError);
  CHECK_THROWS_AS(PauliString::parse("Q0", 2), ValidationError);
  CHECK_THROWS_AS(PauliString::parse("X", 2), ValidationError);
  CHECK_THROWS_AS(PauliString::parse("", 2), ValidationError);
  CHECK_THROWS_AS(PauliString::parse("+2 X0", 2), ValidationError);
}

TEST_CASE("translation shifts sites periodically") {
  const auto s = PauliString::parse("X0 Z2", 3);
  CHECK(s.translated(1) == PauliString::parse("Z0 X1", 3));
  CHECK(s.translated(3) == s);
  CHECK(s.translated(-1) == PauliString::parse("Z1 X2", 3));
}

TEST_CASE("operator basis validates its terms") {
  const int sites = 3;
  auto x0 = PauliString::parse("X0", sites);
  auto z0z1 = PauliString::parse("Z0 Z1", sites);

  auto basis = OperatorBasis::from_strings({x0, z0z1});
  CHECK(basis.size() == 2);
  CHECK(basis.max_string_size() == 2);
  CHECK(basis.index_of_body(z0z1).value() == 1);
  CHECK_FALSE(basis.index_of_body(PauliString::parse("Y1", sites)).has_value());
  CHECK(basis.names() == std::vector<std::string>{"X0", "Z0 Z1"});

  CHECK_THROWS_AS(OperatorBasis::from_strings({x0, x0}), ValidationError);
  CHECK_THROWS_AS(OperatorBasis::from_strings({PauliString::identity(sites)}),
                  ValidationError);
  CHECK_THROWS_AS(OperatorBasis::from_strings({x0.with_phase(2)}),
                  ValidationError);
  CHECK_THROWS_AS(OperatorBasis::from_strings(
                      {x0, PauliString::parse("X0", 4)}),
                  ValidationError);
  CHECK_THROWS_AS(OperatorBasis::from_strings({}), ValidationError);
}

TEST_CASE("dense conversion respects the memory budget") {
  NumericsPolicy tight;
  tight.memory_budget_bytes = 1024;  // far below a 2^6 x 2^6 complex matrix
  CHECK_THROWS_AS(PauliString::parse("X0", 6).to_matrix(tight), CapacityError);
}
