/*
 * Copyright 2026 The dxpolicy Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DXPOLICY_COMMON_HPP
#define DXPOLICY_COMMON_HPP

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dxp {

using AttrIndex = std::uint32_t;
using ValueIndex = std::uint32_t;
using ClassIndex = std::uint32_t;
using ExampleIndex = std::uint32_t;

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959964;
/// One-sided 75% normal quantile (C4.5 pessimistic pruning).
inline constexpr double kZ75 = 0.6744898;

/// Default accounted graph memory: 100 MiB.
inline constexpr std::uint64_t kDefaultByteLimit = 100ull << 20;

//==============================================================================
// Error hierarchy. Everything the library throws derives from Error.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct EmptyDatasetError : Error {
  using Error::Error;
};

/// Maximum-likelihood estimate requested for a state no example matches.
struct UndefinedProbability : Error {
  using Error::Error;
};

struct DecodeError : Error {
  using Error::Error;
};

struct ExecutionError : Error {
  using Error::Error;
};

//==============================================================================
// Deterministic randomness. std::uniform_int_distribution and std::shuffle
// are implementation-defined, so seeded output would differ across standard
// libraries; these helpers pin the exact stream.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a list of tags.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(seed);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ull));
  return h;
}

using Rng = std::mt19937_64;

/// Uniform integer in [0, n), unbiased by rejection. n must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - (max % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dxp

#endif  // DXPOLICY_COMMON_HPP
