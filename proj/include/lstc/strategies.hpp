// SPDX-License-Identifier: Apache-2.0
//
// Level 1 (character stream) and Level 2 (word aware) deletion strategies.
// Every strategy produces a keep mask; the skeleton is the masked subsequence.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lstc/frequency.hpp"
#include "lstc/text.hpp"

namespace lstc {

class Rng;

struct DeletionMask {
  std::vector<bool> keep;
  std::string strategy;
  std::optional<uint64_t> seed;

  std::size_t kept() const;
  std::size_t size() const { return keep.size(); }
};

DeletionMask identity_mask(std::size_t length, std::string strategy);
UnitString apply_mask(UnitView text, const DeletionMask& mask);

// Two-pointer check that `candidate` can be obtained from `original` by deletions only.
bool is_subsequence(UnitView candidate, UnitView original);

struct Skeleton {
  std::string id;
  std::string strategy;
  double r_keep = 1.0;
  std::optional<uint64_t> seed;
  std::size_t original_len = 0;
  UnitString text;
  nlohmann::json extra = nlohmann::json::object();
};

Skeleton make_skeleton(const Chunk& chunk, const RetentionBudget& budget, const DeletionMask& mask,
                       nlohmann::json extra = nlohmann::json::object());

// --- Level 1 ---------------------------------------------------------------

DeletionMask step_delete(const Chunk& chunk, const RetentionBudget& budget);

enum class StochasticDist { gaussian, bernoulli, poisson };

StochasticDist parse_stochastic_dist(std::string_view name);
std::string_view stochastic_dist_name(StochasticDist dist);

struct StochasticParams {
  // Gaussian: std-dev of the jitter around evenly spaced deletion slots, as a
  // fraction of the slot spacing L/D.
  double gaussian_sigma_fraction = 0.25;
  // Poisson: the process rate is D/L scaled by this factor.
  double poisson_rate_scale = 1.0;
};

DeletionMask stochastic_delete(const Chunk& chunk, const RetentionBudget& budget, StochasticDist dist,
                               uint64_t seed, const StochasticParams& params = {});

// --- Level 2 ---------------------------------------------------------------

struct WordLenParams {
  double epsilon = 0.02;
  std::size_t vowel_min_len = 3;
  std::size_t short_word_max = 2;
  std::size_t long_word_min = 8;   // words longer than 7 units
  std::size_t truncate_to = 5;
};

// Stage (1..6) at which the pipeline stopped; 0 if no edit was needed.
struct WordLenResult {
  DeletionMask mask;
  int last_stage = 0;
};

WordLenResult wordlen_delete_traced(const Chunk& chunk, const RetentionBudget& budget, uint64_t seed,
                                    const WordLenParams& params = {});
DeletionMask wordlen_delete(const Chunk& chunk, const RetentionBudget& budget, uint64_t seed,
                            const WordLenParams& params = {});

// Largest-remainder apportionment of `total` by `weights`, never exceeding
// `capacity[k]`. Ties in the remainder go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>& capacity);

DeletionMask wordfreq_delete(const Chunk& chunk, const RetentionBudget& budget,
                             const TokenSpans& spans, const BucketProfile& profile, uint64_t seed);

// Deletes quota[k] uniformly sampled units of each profile bucket.
void delete_uniform_per_bucket(std::vector<bool>& keep, const std::vector<Bucket>& unit_labels,
                               const BucketProfile& profile, const std::vector<std::size_t>& quota,
                               Rng& rng);

}  // namespace lstc
