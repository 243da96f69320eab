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

#include <cmath>
#include <cstdint>

namespace qtomo {

// Stream identifiers; each consumer of randomness owns one so that draws
// never alias across subsystems sharing a seed.
inline constexpr std::uint64_t kStreamBloch = 1;
inline constexpr std::uint64_t kStreamXyz = 2;
inline constexpr std::uint64_t kStreamHaar = 3;
inline constexpr std::uint64_t kStreamCouplings = 4;
inline constexpr std::uint64_t kStreamNoise = 5;
inline constexpr std::uint64_t kStreamSolver = 6;
inline constexpr std::uint64_t kStreamSplit = 7;

/// splitmix64 finalizer: bijective, avalanching 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives a sub-seed from up to three keys. Used for per-realization and
/// per-sweep-point seeds so that adding sweep points never perturbs draws
/// belonging to existing ones.
inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix64(a);
  s = mix64(s ^ (b + 0x9E3779B97F4A7C15ULL));
  s = mix64(s ^ (c + 0xC2B2AE3D27D4EB4FULL));
  return s;
}

/// Counter-based random stream keyed by (seed, stream, index). Equal keys
/// give bit-identical draws on every platform and thread schedule; the
/// standard-library distributions are avoided because their outputs are
/// implementation defined.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : state_(derive_seed(seed, stream, index)) {}

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_ ^ counter_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Standard normal via Box-Muller; draws are paired internally.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    do {
      u = next_double();
    } while (u <= 0.0);
    const double v = next_double();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double a = 6.283185307179586476925286766559 * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qtomo
