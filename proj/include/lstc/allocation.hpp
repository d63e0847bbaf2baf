// SPDX-License-Identifier: Apache-2.0
//
// Bucket-level deletion budget allocation.
//
// Each bucket k holds a fraction p_k of the text and, when a fraction w_k of
// it is deleted, is modelled to keep a similarity contribution of
//
//     B_k(w_k) = 1 - w_k (1 - B_k^full)
//
// where B_k^full is the calibrated score with the whole bucket removed. The
// allocator maximises sum_k p_k B_k(w_k) subject to sum_k p_k w_k >= 1 - r_keep
// and 0 <= w_k <= 1. That is a fractional knapsack: sort buckets by their
// per-unit cost 1 - B_k^full and fill the cheapest completely, leaving at most
// one bucket partially deleted.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lstc/frequency.hpp"
#include "lstc/strategies.hpp"

namespace lstc {

class ReconstructionClient;
class SimilarityProvider;

enum class CalibrationScheme { three_class, six_class, tertile };

std::string_view calibration_scheme_name(CalibrationScheme s);  // "3", "6", "tertile"
CalibrationScheme parse_calibration_scheme(std::string_view name);
std::vector<Bucket> calibration_buckets(CalibrationScheme s);

struct CalibrationTable {
  CalibrationScheme scheme = CalibrationScheme::six_class;
  std::map<Bucket, double> b_full;
  // Buckets that never occurred in the calibration corpus (recorded as 1.0).
  std::vector<Bucket> absent;
  nlohmann::json provenance = nlohmann::json::object();

  // Throws ConfigError naming the bucket when it is missing.
  double at(Bucket b) const;
};

CalibrationTable load_calibration(const std::string& path);
CalibrationTable calibration_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const CalibrationTable& table);
void save_calibration(const CalibrationTable& table, const std::string& path);

struct AllocationWeights {
  std::vector<Bucket> buckets;
  std::vector<double> w;
  double objective = 1.0;  // predicted score sum_k p_k B_k(w_k)
  double r_keep = 1.0;

  double weight(Bucket b) const;
};

double bucket_score(double w, double b_full);

// Objective of an arbitrary weight vector; shared by the solver and checks.
double allocation_objective(const std::vector<double>& p, const std::vector<double>& b_full,
                            const std::vector<double>& w);

// Greedy closed-form solver over raw vectors. `tie_rank` orders equal-cost
// buckets (smaller first); pass empty for index order.
std::vector<double> solve_allocation_greedy(const std::vector<double>& p,
                                            const std::vector<double>& b_full, double r_keep,
                                            const std::vector<int>& tie_rank = {});

AllocationWeights solve_allocation(const BucketProfile& profile, const CalibrationTable& calib,
                                   double r_keep);

// Per-bucket deletion counts: largest-remainder split of the exact deletion
// total D by w_k * count_k.
std::vector<std::size_t> allocation_quota(const BucketProfile& profile,
                                          const AllocationWeights& weights, std::size_t deletions);

nlohmann::json weights_to_json(const AllocationWeights& weights);

Skeleton opt_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                    const BucketProfile& profile, const CalibrationTable& calib, uint64_t seed);

struct CalibrationOptions {
  std::string corpus_id = "unknown";
  std::string date;  // free-form provenance, e.g. ISO date
  std::size_t jobs = 1;  // chunks reconstructed concurrently
};

// For every bucket of the scheme: delete it entirely from each chunk,
// reconstruct, score against the original and average.
// Shared core: per-chunk spans and profiles are supplied by the caller.
CalibrationTable calibrate_prepared(const std::vector<Chunk>& corpus,
                                   const std::vector<TokenSpans>& spans,
                                   const std::vector<BucketProfile>& profiles,
                                   CalibrationScheme scheme, ReconstructionClient& decoder,
                                   SimilarityProvider& similarity,
                                   const CalibrationOptions& options = {});

CalibrationTable calibrate(const std::vector<Chunk>& corpus, const FrequencyTable& table,
                           BucketMode mode, ReconstructionClient& decoder,
                           SimilarityProvider& similarity, const CalibrationOptions& options = {});

}  // namespace lstc
