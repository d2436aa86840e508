// Copyright 2026 The qsimnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

namespace qsimnet {

/// SplitMix64 (Steele, Lea, Flood; public-domain constants).
///
/// The output sequence for a given seed is pinned by this implementation and
/// is part of the reproducibility contract: circuits generated from the same
/// (grid, depth, seed) triple are byte-identical on every platform, and plans
/// found from the same (network, seed, restarts) are identical as well. That
/// rules out std::uniform_*_distribution, whose output is not specified.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Low bit of the next output word.
  int next_bit() { return static_cast<int>(next() & 1u); }

  /// Uniform-ish value in [0, bound). Plain modulo: the tiny modulo bias is
  /// irrelevant for tie-breaking and sampling at this scale, determinism is
  /// what matters.
  uint64_t next_below(uint64_t bound) { return next() % bound; }

  /// Double in [0, 1).
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// In-place Fisher-Yates shuffle with a pinned visit order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

/// Derives an independent stream for substream `k` of `seed` (used for
/// planner restarts and per-worker sampling).
inline uint64_t derive_seed(uint64_t seed, uint64_t k) {
  SplitMix64 rng(seed ^ (0x517cc1b727220a95ull * (k + 1)));
  return rng.next();
}

}  // namespace qsimnet
