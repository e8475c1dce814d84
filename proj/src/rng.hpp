/*
 * Copyright 2026 The Fedsniff Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace fedsniff {

/// Deterministic random source used everywhere in the project.
///
/// Wraps std::mt19937_64 (whose raw output sequence is pinned by the C++
/// standard) and supplies its own distribution transforms, so that replaying
/// an experiment with the same seed is bit-identical regardless of the
/// standard library implementation. Experiments derive independent streams
/// with mix() instead of sharing one generator across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n); rejection sampled, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal deviate (Box-Muller, pair cached).
  double normal();

  /// Fisher-Yates shuffle driven by this generator.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Derives a stream seed from a list of values (splitmix64 chain).
  /// mix({seed, tag, round, client}) gives every unit of work its own
  /// independent generator, which keeps parallel execution deterministic.
  static std::uint64_t mix(std::initializer_list<std::uint64_t> parts);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fedsniff
