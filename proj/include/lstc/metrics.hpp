// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lstc/text.hpp"

namespace lstc {

class LineProcess;

// Unit-level Levenshtein distance (unit costs).
std::size_t edit_distance(UnitView a, UnitView b);

// edit_distance / |reference|; throws on an empty reference.
double cer(UnitView reference, UnitView hypothesis);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);
std::size_t lcs_length(UnitView a, UnitView b);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

RougeL rouge_l(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis);

// Lower-cased word and digit tokens; punctuation, whitespace and other spans are dropped.
std::vector<std::string> rouge_tokens(UnitView text, Lang lang = Lang::english);
RougeL rouge_l_text(UnitView reference, UnitView hypothesis, Lang lang = Lang::english);

// Fraction of annotated mentions whose surface survives contiguously in the
// skeleton. nullopt when the chunk has no annotations.
std::optional<double> entity_preservation(const Chunk& chunk, UnitView skeleton_text);

class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  // nullopt on provider failure; callers record "none" and continue.
  virtual std::optional<double> score(UnitView reference, UnitView hypothesis) = 0;
  virtual std::string name() const = 0;
};

// 1 if identical, otherwise LCS(ref, hyp) / max(|ref|, |hyp|) over units.
class ExactMatchSimilarity final : public SimilarityProvider {
 public:
  std::optional<double> score(UnitView reference, UnitView hypothesis) override;
  std::string name() const override { return "exact_match"; }
};

// {"ref": str, "hyp": str} per line on stdin -> {"score": f} per line on stdout.
class ExternalProcessSimilarity final : public SimilarityProvider {
 public:
  explicit ExternalProcessSimilarity(std::string command);
  ~ExternalProcessSimilarity() override;
  std::optional<double> score(UnitView reference, UnitView hypothesis) override;
  std::string name() const override;

 private:
  std::unique_ptr<LineProcess> process_;
};

std::optional<double> similarity(UnitView reference, UnitView hypothesis,
                                 SimilarityProvider* provider);

struct MetricReport {
  std::string chunk_id;
  std::string strategy;
  double r_keep = 1.0;
  double cer = 0.0;
  double rouge_l_f = 0.0;
  std::optional<double> entity_preservation;
  double realized_retention = 1.0;
  std::optional<double> semantic_sim;
  std::size_t attempts = 0;
};

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
};

// mean +- 1.96 * s / sqrt(n)
ConfidenceInterval confidence_interval(double mean, double sd, std::size_t n);

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1); 0 when n == 1
  std::size_t n = 0;
  ConfidenceInterval ci;
};

SummaryStat summarize(const std::vector<double>& values);

struct SummaryRow {
  std::string strategy;
  double r_keep = 1.0;
  std::string metric;
  SummaryStat stat;
};

// Per (strategy, r_keep, metric) cell; optional metrics only count present values.
// Cells with no values are omitted with a warning.
std::vector<SummaryRow> aggregate(const std::vector<MetricReport>& reports);

}  // namespace lstc
