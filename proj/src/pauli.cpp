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

#include "qtomo/pauli.hpp"

#include <bit>
#include <map>
#include <sstream>

namespace qtomo {

namespace {

// Site codes pack the bit pair (x, z) as x | (z << 1), so I=0, X=1, Z=2,
// Y=3; note this differs from the alphabetical PauliLetter order.
constexpr int kLetterCode[4] = {0, 1, 3, 2};  // I, X, Y, Z -> code
constexpr PauliLetter kCodeLetter[4] = {PauliLetter::I, PauliLetter::X,
                                        PauliLetter::Z, PauliLetter::Y};

// Power of i in sigma_a * sigma_b = i^g * sigma_(a xor b), indexed
// (a << 2) | b with the site codes above.
constexpr std::uint8_t kProductPhase[16] = {
    0, 0, 0, 0,   // I*
    0, 0, 3, 1,   // X*: XZ=-iY, XY=iZ
    0, 1, 0, 3,   // Z*: ZX=iY, ZY=-iX
    0, 3, 1, 0};  // Y*: YX=-iZ, YZ=iX

std::uint64_t site_bit(int site) { return std::uint64_t{1} << site; }

int parity(std::uint64_t v) { return std::popcount(v) & 1; }

}  // namespace

char letter_char(PauliLetter l) {
  switch (l) {
    case PauliLetter::I: return 'I';
    case PauliLetter::X: return 'X';
    case PauliLetter::Y: return 'Y';
    case PauliLetter::Z: return 'Z';
  }
  return '?';
}

PauliString::PauliString(int site_count) : site_count_(site_count) {
  if (site_count < 1 || site_count > 64)
    throw ValidationError("site count must be in [1, 64], got " +
                          std::to_string(site_count));
}

PauliString::PauliString(int site_count, std::uint64_t x, std::uint64_t z,
                         int phase)
    : PauliString(site_count) {
  x_mask_ = x;
  z_mask_ = z;
  phase_power_ = static_cast<std::uint8_t>(((phase % 4) + 4) % 4);
}

PauliString PauliString::identity(int site_count) {
  return PauliString(site_count);
}

PauliString PauliString::single(int site_count, int site, PauliLetter letter) {
  PauliString s(site_count);
  if (site < 0 || site >= site_count)
    throw ValidationError("site " + std::to_string(site) + " out of range");
  const int code = kLetterCode[static_cast<int>(letter)];
  if (code & 1) s.x_mask_ |= site_bit(site);
  if (code & 2) s.z_mask_ |= site_bit(site);
  return s;
}

PauliString PauliString::from_masks(int site_count, std::uint64_t x_mask,
                                    std::uint64_t z_mask, int phase_power) {
  const std::uint64_t valid =
      site_count == 64 ? ~std::uint64_t{0} : (site_bit(site_count) - 1);
  if ((x_mask & ~valid) || (z_mask & ~valid))
    throw ValidationError("mask bits beyond the site count");
  return PauliString(site_count, x_mask, z_mask, phase_power);
}

PauliString PauliString::from_letters(const std::vector<PauliLetter>& letters,
                                      int phase_power) {
  PauliString s(static_cast<int>(letters.size()));
  for (int site = 0; site < s.site_count_; ++site) {
    const int code = kLetterCode[static_cast<int>(letters[site])];
    if (code & 1) s.x_mask_ |= site_bit(site);
    if (code & 2) s.z_mask_ |= site_bit(site);
  }
  s.phase_power_ = static_cast<std::uint8_t>(((phase_power % 4) + 4) % 4);
  return s;
}

PauliString PauliString::parse(const std::string& text, int site_count) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.empty()) throw ValidationError("empty Pauli string text");

  int phase = 0;
  std::size_t first = 0;
  if (tokens[0] == "+1") {
    phase = 0;
    first = 1;
  } else if (tokens[0] == "+i") {
    phase = 1;
    first = 1;
  } else if (tokens[0] == "-1") {
    phase = 2;
    first = 1;
  } else if (tokens[0] == "-i") {
    phase = 3;
    first = 1;
  } else if (tokens[0][0] == '+' || tokens[0][0] == '-') {
    throw ValidationError("bad phase tag '" + tokens[0] +
                          "', expected one of +1, +i, -1, -i");
  }
  if (first >= tokens.size())
    throw ValidationError("phase tag without operator body in '" + text + "'");

  PauliString s(site_count);
  s.phase_power_ = static_cast<std::uint8_t>(phase);
  if (tokens.size() - first == 1 && tokens[first] == "I") return s;

  for (std::size_t k = first; k < tokens.size(); ++k) {
    const std::string& tok = tokens[k];
    PauliLetter letter;
    switch (tok[0]) {
      case 'X': letter = PauliLetter::X; break;
      case 'Y': letter = PauliLetter::Y; break;
      case 'Z': letter = PauliLetter::Z; break;
      default:
        throw ValidationError("bad Pauli token '" + tok + "' in '" + text +
                              "'");
    }
    std::size_t used = 0;
    int site = -1;
    try {
      site = std::stoi(tok.substr(1), &used);
    } catch (const std::exception&) {
      throw ValidationError("bad site in token '" + tok + "'");
    }
    if (used + 1 != tok.size() || site < 0)
      throw ValidationError("bad site in token '" + tok + "'");
    if (site >= site_count)
      throw ValidationError("site " + std::to_string(site) +
                            " out of range for " +
                            std::to_string(site_count) + " sites");
    const std::uint64_t bit = site_bit(site);
    if ((s.x_mask_ | s.z_mask_) & bit)
      throw ValidationError("duplicate site " + std::to_string(site) +
                            " in '" + text + "'");
    const int code = kLetterCode[static_cast<int>(letter)];
    if (code & 1) s.x_mask_ |= bit;
    if (code & 2) s.z_mask_ |= bit;
  }
  return s;
}

std::complex<double> PauliString::phase() const {
  switch (phase_power_) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

PauliLetter PauliString::letter(int site) const {
  if (site < 0 || site >= site_count_)
    throw ValidationError("site " + std::to_string(site) + " out of range");
  const int code = static_cast<int>((x_mask_ >> site) & 1) |
                   (static_cast<int>((z_mask_ >> site) & 1) << 1);
  return kCodeLetter[code];
}

int PauliString::size() const { return std::popcount(x_mask_ | z_mask_); }

bool PauliString::same_body(const PauliString& other) const {
  return site_count_ == other.site_count_ && x_mask_ == other.x_mask_ &&
         z_mask_ == other.z_mask_;
}

PauliString PauliString::with_phase(int phase_power) const {
  return PauliString(site_count_, x_mask_, z_mask_, phase_power);
}

PauliString PauliString::translated(int delta) const {
  const int L = site_count_;
  int d = ((delta % L) + L) % L;
  if (d == 0) return *this;
  const std::uint64_t valid =
      L == 64 ? ~std::uint64_t{0} : (site_bit(L) - 1);
  auto rot = [&](std::uint64_t m) {
    return ((m << d) | (m >> (L - d))) & valid;
  };
  return PauliString(site_count_, rot(x_mask_), rot(z_mask_), phase_power_);
}

PauliString PauliString::operator*(const PauliString& rhs) const {
  if (site_count_ != rhs.site_count_)
    throw ValidationError("site count mismatch in Pauli product");
  int phase = phase_power_ + rhs.phase_power_;
  std::uint64_t both = (x_mask_ | z_mask_) & (rhs.x_mask_ | rhs.z_mask_);
  while (both) {
    const int site = std::countr_zero(both);
    both &= both - 1;
    const int a = static_cast<int>((x_mask_ >> site) & 1) |
                  (static_cast<int>((z_mask_ >> site) & 1) << 1);
    const int b = static_cast<int>((rhs.x_mask_ >> site) & 1) |
                  (static_cast<int>((rhs.z_mask_ >> site) & 1) << 1);
    phase += kProductPhase[(a << 2) | b];
  }
  return PauliString(site_count_, x_mask_ ^ rhs.x_mask_,
                     z_mask_ ^ rhs.z_mask_, phase);
}

bool PauliString::commutes_with(const PauliString& other) const {
  if (site_count_ != other.site_count_)
    throw ValidationError("site count mismatch in commutation check");
  return parity((x_mask_ & other.z_mask_) ^ (z_mask_ & other.x_mask_)) == 0;
}

bool PauliString::operator==(const PauliString& rhs) const {
  return same_body(rhs) && phase_power_ == rhs.phase_power_;
}

std::string PauliString::str() const {
  std::string out;
  switch (phase_power_) {
    case 0: break;
    case 1: out = "+i "; break;
    case 2: out = "-1 "; break;
    default: out = "-i "; break;
  }
  if (is_identity_body()) return out + "I";
  bool space = false;
  for (int site = 0; site < site_count_; ++site) {
    const PauliLetter l = letter(site);
    if (l == PauliLetter::I) continue;
    if (space) out += ' ';
    out += letter_char(l);
    out += std::to_string(site);
    space = true;
  }
  return out;
}

Eigen::MatrixXcd PauliString::to_matrix(const NumericsPolicy& policy) const {
  const std::size_t dim = std::size_t{1} << site_count_;
  policy.check_dense(dim, "PauliString::to_matrix");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  // Column c maps to row c ^ x_mask with entry
  //   i^(phase + #Y) * (-1)^popcount(c & z_mask).
  const int y_count = std::popcount(x_mask_ & z_mask_);
  const std::complex<double> base =
      PauliString(site_count_, 0, 0, phase_power_ + y_count).phase();
  for (std::uint64_t c = 0; c < dim; ++c) {
    const double sign = parity(c & z_mask_) ? -1.0 : 1.0;
    m(c ^ x_mask_, c) = base * sign;
  }
  return m;
}

std::complex<double> normalized_trace_product(const PauliString& a,
                                              const PauliString& b) {
  const PauliString ab = a * b;
  if (!ab.is_identity_body()) return {0, 0};
  return ab.phase();
}

OperatorBasis OperatorBasis::from_strings(std::vector<PauliString> terms) {
  if (terms.empty()) throw ValidationError("operator basis must be non-empty");
  OperatorBasis basis;
  basis.site_count_ = terms.front().site_count();
  std::map<std::pair<std::uint64_t, std::uint64_t>, int> seen;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const auto& s = terms[k];
    if (s.site_count() != basis.site_count_)
      throw ValidationError("operator basis mixes site counts");
    if (s.is_identity_body())
      throw ValidationError("operator basis must not contain the identity");
    if (s.phase_power() != 0)
      throw ValidationError("operator basis terms must carry phase +1");
    if (!seen.emplace(s.body_key(), static_cast<int>(k)).second)
      throw ValidationError("duplicate operator '" + s.str() + "' in basis");
  }
  basis.terms_ = std::move(terms);
  return basis;
}

int OperatorBasis::max_string_size() const {
  int l = 0;
  for (const auto& s : terms_) l = std::max(l, s.size());
  return l;
}

std::optional<int> OperatorBasis::index_of_body(const PauliString& s) const {
  for (std::size_t k = 0; k < terms_.size(); ++k)
    if (terms_[k].same_body(s)) return static_cast<int>(k);
  return std::nullopt;
}

std::vector<std::string> OperatorBasis::names() const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const auto& s : terms_) out.push_back(s.str());
  return out;
}

}  // namespace qtomo
