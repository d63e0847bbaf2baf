// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lstc/text.hpp"

namespace lstc {

// Every bucket label used anywhere in the toolkit. Frequency schemes use the
// first six; surprisal-tertile profiles replace LOW/MID/HIGH with T_*.
enum class Bucket : uint8_t { low, mid, high, punct, others, whitespace, t_low, t_mid, t_high };

inline constexpr std::size_t kBucketCount = 9;

std::string_view bucket_name(Bucket b);
std::optional<Bucket> parse_bucket(std::string_view name);

// Position in the allocator's tie-break order; smaller is sacrificed first.
int bucket_tie_rank(Bucket b);

class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::string language) : language_(std::move(language)) {}

  // Keys are lower-cased on insert and lookup.
  void set(std::string_view word, double zipf);
  std::optional<double> lookup(std::string_view word) const;
  std::optional<double> lookup(UnitView word) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& language() const { return language_; }

 private:
  std::unordered_map<std::string, double> entries_;
  std::string language_ = "en";
};

// TSV `word<TAB>zipf`; blank lines are ignored, duplicate words keep the last value.
FrequencyTable load_frequency_table(const std::string& path);
FrequencyTable parse_frequency_table(std::string_view tsv, const std::string& source_name);

enum class BucketMode { three_class, six_class };

std::string_view bucket_mode_name(BucketMode mode);  // "3" or "6"
BucketMode parse_bucket_mode(std::string_view name);

struct BucketScheme {
  BucketMode mode = BucketMode::six_class;
  double low_hi = 3.0;
  double mid_hi = 4.0;

  std::vector<Bucket> buckets() const;
  Bucket zipf_bucket(std::optional<double> zipf) const;
};

struct BucketProfile {
  std::vector<Bucket> buckets;       // scheme order
  std::vector<double> p;             // unit-mass fraction, aligned with `buckets`
  std::vector<std::size_t> counts;   // unit counts, aligned with `buckets`
  std::vector<Bucket> assignment;    // one label per TokenSpan

  std::size_t index_of(Bucket b) const;  // npos when the bucket is not in the profile
  double mass(Bucket b) const;
  std::size_t count(Bucket b) const;
  std::size_t total_units() const;
};

// Builds p/counts from a per-span labelling over an explicit bucket list.
BucketProfile make_profile(const TokenSpans& spans, std::vector<Bucket> assignment,
                           std::vector<Bucket> buckets);

BucketProfile classify(const Chunk& chunk, const TokenSpans& spans, const FrequencyTable& table,
                       const BucketScheme& scheme);

// Per-unit bucket label expanded from the span assignment.
std::vector<Bucket> unit_buckets(const TokenSpans& spans, const BucketProfile& profile,
                                 std::size_t length);

}  // namespace lstc
