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
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtomo/numerics.hpp"

namespace qtomo {

enum class PauliLetter : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char letter_char(PauliLetter l);

/// Pauli string on a fixed number of sites, stored as packed X/Z bitmasks
/// plus an integer power of i. Site 0 is the least significant bit of a
/// computational-basis index. The represented operator is
///   i^phase_power * (product over sites of the site letters),
/// where a site letter is I, X, Y or Z according to its (x, z) bit pair:
/// (0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.
class PauliString {
 public:
  /// Identity on `site_count` sites.
  explicit PauliString(int site_count);

  static PauliString identity(int site_count);
  static PauliString single(int site_count, int site, PauliLetter letter);
  static PauliString from_masks(int site_count, std::uint64_t x_mask,
                                std::uint64_t z_mask, int phase_power = 0);
  static PauliString from_letters(const std::vector<PauliLetter>& letters,
                                  int phase_power = 0);

  /// Parses the textual notation, e.g. "X0 Z3", "-i Y1", "I".
  /// The optional leading phase tag is one of {+1, +i, -1, -i}.
  static PauliString parse(const std::string& text, int site_count);

  int site_count() const { return site_count_; }
  std::uint64_t x_mask() const { return x_mask_; }
  std::uint64_t z_mask() const { return z_mask_; }

  /// Power k of the stored phase i^k, reduced mod 4.
  int phase_power() const { return phase_power_; }
  std::complex<double> phase() const;

  PauliLetter letter(int site) const;

  /// Number of non-identity sites.
  int size() const;

  bool is_identity_body() const { return x_mask_ == 0 && z_mask_ == 0; }
  /// Hermitian iff the phase is real (+1 or -1).
  bool is_hermitian() const { return (phase_power_ & 1) == 0; }

  /// Same letters regardless of phase.
  bool same_body(const PauliString& other) const;

  PauliString with_phase(int phase_power) const;

  /// Sites shifted by `delta` with periodic wraparound.
  PauliString translated(int delta) const;

  /// Operator product; phases multiply exactly (integer arithmetic).
  PauliString operator*(const PauliString& rhs) const;

  bool commutes_with(const PauliString& other) const;

  bool operator==(const PauliString& rhs) const;
  bool operator!=(const PauliString& rhs) const { return !(*this == rhs); }

  /// Body masks as a lexicographically ordered key; canonical string order.
  std::pair<std::uint64_t, std::uint64_t> body_key() const {
    return {x_mask_, z_mask_};
  }

  std::string str() const;

  /// Dense 2^L x 2^L matrix. Guarded by the dense-memory budget.
  Eigen::MatrixXcd to_matrix(
      const NumericsPolicy& policy = NumericsPolicy::standard()) const;

 private:
  PauliString(int site_count, std::uint64_t x, std::uint64_t z, int phase);

  std::uint64_t x_mask_ = 0;
  std::uint64_t z_mask_ = 0;
  int site_count_ = 0;
  std::uint8_t phase_power_ = 0;
};

/// Tr(a * b) / 2^L, exact in integer phase arithmetic: nonzero only when the
/// bodies coincide, in which case it is a power of i.
std::complex<double> normalized_trace_product(const PauliString& a,
                                              const PauliString& b);

/// Ordered collection of distinct, phase-free (i^0), non-identity Pauli
/// strings acting on a common register. Serves as the operator ansatz for
/// reconstruction, so validation is strict.
class OperatorBasis {
 public:
  static OperatorBasis from_strings(std::vector<PauliString> terms);

  int site_count() const { return site_count_; }
  int size() const { return static_cast<int>(terms_.size()); }
  const PauliString& term(int alpha) const { return terms_.at(alpha); }
  const std::vector<PauliString>& terms() const { return terms_; }

  /// Largest string size in the basis (l_max).
  int max_string_size() const;

  std::optional<int> index_of_body(const PauliString& s) const;

  std::vector<std::string> names() const;

 private:
  std::vector<PauliString> terms_;
  int site_count_ = 0;
};

}  // namespace qtomo
