// SPDX-License-Identifier: Apache-2.0
//
// Seeded sampling primitives. The <random> distributions are implementation
// defined, so masks would differ between standard libraries; these helpers
// derive everything from the raw mt19937_64 stream, which is fully specified.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lstc {

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) without modulo bias.
  uint64_t below(uint64_t bound);

  double normal();  // Box-Muller, standard normal
  double exponential(double mean);

  // k distinct indices from [0, n) in sampling order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit FNV-1a, used for per-chunk seed derivation and config hashes.
uint64_t fnv1a64(std::string_view data, uint64_t basis = 0xcbf29ce484222325ULL);

// Seed for one (run seed, chunk id, strategy) cell.
uint64_t derive_seed(uint64_t run_seed, std::string_view chunk_id, std::string_view strategy);

}  // namespace lstc
