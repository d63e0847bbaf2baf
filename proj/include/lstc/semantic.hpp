// SPDX-License-Identifier: Apache-2.0
//
// Surprisal-guided (Level 3) strategies. Surprisal is never computed here: it
// is read from a file, requested from a helper process, or approximated from
// unigram Zipf scores.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lstc/allocation.hpp"
#include "lstc/frequency.hpp"
#include "lstc/strategies.hpp"

namespace lstc {

class LineProcess;

// One score per word span of the chunk, in order (nats).
struct SurprisalScores {
  std::string chunk_id;
  std::vector<double> values;
};

// Throws AlignmentError when the score count differs from the word-span count.
void check_alignment(const SurprisalScores& scores, const TokenSpans& spans);

class SurprisalProvider {
 public:
  virtual ~SurprisalProvider() = default;
  virtual SurprisalScores scores(const Chunk& chunk, const TokenSpans& spans) = 0;
  virtual std::string name() const = 0;
};

// JSONL records {"id", "tokens", "surprisal"}; tokens must equal the chunk's word spans.
class FileSurprisalProvider final : public SurprisalProvider {
 public:
  explicit FileSurprisalProvider(const std::string& path);
  static FileSurprisalProvider from_string(std::string_view jsonl, const std::string& source);
  SurprisalScores scores(const Chunk& chunk, const TokenSpans& spans) override;
  std::string name() const override { return "file"; }

 private:
  FileSurprisalProvider() = default;
  void parse(std::string_view jsonl, const std::string& source);

  struct Record {
    std::vector<std::string> tokens;
    std::vector<double> surprisal;
  };
  std::map<std::string, Record> records_;
};

// Sends {"id", "tokens"} per line, expects {"surprisal": [...]} per line.
class ProcessSurprisalProvider final : public SurprisalProvider {
 public:
  explicit ProcessSurprisalProvider(std::string command);
  ~ProcessSurprisalProvider() override;
  SurprisalScores scores(const Chunk& chunk, const TokenSpans& spans) override;
  std::string name() const override { return "external_process"; }

 private:
  std::unique_ptr<LineProcess> process_;
};

// surprisal = max(0, (8 - zipf) ln 10); OOV words count as zipf 0.
class UnigramSurprisalProvider final : public SurprisalProvider {
 public:
  explicit UnigramSurprisalProvider(const FrequencyTable& table) : table_(table) {}
  SurprisalScores scores(const Chunk& chunk, const TokenSpans& spans) override;
  std::string name() const override { return "unigram_fallback"; }

  static double from_zipf(double zipf);

 private:
  const FrequencyTable& table_;
};

// Word-token deletion orders (indices into the chunk's word spans).
std::vector<std::size_t> entropy_order(const std::vector<double>& surprisal);
std::vector<std::size_t> frequency_order(const std::vector<double>& zipf);

// Average (fractional) ranks normalised to [0, 1] by rank / (n - 1).
std::vector<double> normalized_ranks(const std::vector<double>& keys);

struct HybridConfig {
  double alpha = 0.5;
  explicit HybridConfig(double a = 0.5);
};

// Combined score alpha * freq_norm + (1 - alpha) * surp_norm, where the most
// frequent and the most predictable words have rank 0.
std::vector<double> hybrid_scores(const std::vector<double>& zipf,
                                  const std::vector<double>& surprisal, const HybridConfig& cfg);
std::vector<std::size_t> hybrid_order(const std::vector<double>& zipf,
                                      const std::vector<double>& surprisal, const HybridConfig& cfg);

// Zipf of each word span (OOV -> 0).
std::vector<double> word_zipf(const Chunk& chunk, const TokenSpans& spans, const FrequencyTable& table);

// Whole-token deletion in `order`, absorbing one adjacent whitespace run per
// token, then trimming the last token from its end to hit the exact budget.
DeletionMask delete_tokens_in_order(const Chunk& chunk, const TokenSpans& spans,
                                    const std::vector<std::size_t>& word_order,
                                    std::size_t target_kept, std::string strategy);

DeletionMask entropy_delete(const Chunk& chunk, const RetentionBudget& budget,
                            const TokenSpans& spans, const SurprisalScores& scores, uint64_t seed);

// Per-chunk surprisal tertiles; tied scores share a tertile and chunks with
// fewer than three words put every word in T_MID.
std::vector<Bucket> surprisal_tertiles(const std::vector<double>& surprisal);
BucketProfile tertile_profile(const TokenSpans& spans, const SurprisalScores& scores);

// Calibration over per-chunk surprisal tertiles (for entropy_lp).
CalibrationTable calibrate_tertiles(const std::vector<Chunk>& corpus, SurprisalProvider& surprisal,
                                   ReconstructionClient& decoder, SimilarityProvider& similarity,
                                   const CalibrationOptions& options = {});

Skeleton entropy_lp_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                           const SurprisalScores& scores, const CalibrationTable& calib,
                           uint64_t seed);

Skeleton entropy_in_freqbuckets_delete(const Chunk& chunk, const RetentionBudget& budget,
                                       const TokenSpans& spans, const SurprisalScores& scores,
                                       const BucketProfile& profile, const CalibrationTable& calib,
                                       uint64_t seed);

Skeleton hybrid_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                       const SurprisalScores& scores, const FrequencyTable& table,
                       const HybridConfig& cfg, uint64_t seed);

}  // namespace lstc
