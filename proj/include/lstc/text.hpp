// SPDX-License-Identifier: Apache-2.0
//
// Canonical text model. A text unit is one Unicode scalar value; every offset,
// length and budget in the toolkit is counted in these units.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lstc {

using UnitString = std::u32string;
using UnitView = std::u32string_view;

// Strict UTF-8 decoding; throws lstc::Error on ill-formed input.
UnitString utf8_to_units(std::string_view utf8);
std::string units_to_utf8(UnitView units);

enum class Lang { english, presegmented };

std::string_view lang_name(Lang lang);
Lang parse_lang(std::string_view name);

struct EntityMention {
  std::string surface;
  std::size_t start = 0;  // unit offset
  std::size_t end = 0;    // exclusive
};

struct Chunk {
  std::string id;
  UnitString text;
  Lang lang = Lang::english;
  std::optional<std::vector<EntityMention>> entities;
  // Whitespace unit removed between this chunk and the next piece of the
  // same record when ingestion had to split it.
  std::optional<char32_t> split_separator;

  std::size_t length() const { return text.size(); }
  std::string text_utf8() const { return units_to_utf8(text); }
};

// Builds a chunk and checks its invariants (L >= 1, entity offsets match surfaces).
Chunk make_chunk(std::string id, std::string_view utf8_text, Lang lang = Lang::english,
                 std::optional<std::vector<EntityMention>> entities = std::nullopt);

enum class SpanKind { word, punct, whitespace, digit_run, other };

std::string_view span_kind_name(SpanKind kind);

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  SpanKind kind = SpanKind::other;

  std::size_t length() const { return end - start; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

using TokenSpans = std::vector<TokenSpan>;

// Character classes used by the tokenizer (Unicode properties, locale free).
bool is_whitespace_unit(char32_t c);
bool is_letter_unit(char32_t c);
bool is_digit_unit(char32_t c);
bool is_punct_unit(char32_t c);

TokenSpans tokenize(const Chunk& chunk);
TokenSpans tokenize(UnitView text, Lang lang);

// Indices into `spans` of the word spans, in order.
std::vector<std::size_t> word_span_indices(const TokenSpans& spans);

// Lower-cased UTF-8 form of a span, used for frequency lookups.
std::string span_key(UnitView text, const TokenSpan& span);
std::string lowercase_utf8(UnitView units);

struct RetentionBudget {
  double r_keep = 1.0;
  double epsilon = 0.0;

  RetentionBudget() = default;
  explicit RetentionBudget(double r, double eps = 0.0);

  // round-half-up(r_keep * length)
  std::size_t target_kept(std::size_t length) const;
};

// Round-half-up of r * length, shared by every exact-rate strategy.
std::size_t round_half_up_units(double r, std::size_t length);

struct Retention {
  std::size_t kept = 0;
  std::size_t original = 1;

  double value() const { return static_cast<double>(kept) / static_cast<double>(original); }
  double compression_ratio() const {
    return static_cast<double>(original) / static_cast<double>(kept);
  }
};

Retention realized_retention(const Chunk& original, UnitView skeleton_text);

struct IngestOptions {
  std::size_t max_chunk = 512;
};

std::vector<Chunk> ingest_corpus(const std::string& path, const IngestOptions& options = {});
std::vector<Chunk> ingest_corpus_stream(std::string_view jsonl, const std::string& source_name,
                                        const IngestOptions& options = {});

// Splits one record's text per the ingestion rule. Exposed for tests.
std::vector<Chunk> split_record(const Chunk& record, std::size_t max_chunk);

// Inverse of split_record for the text (reinserting recorded separators).
UnitString rejoin_chunks(const std::vector<Chunk>& pieces);

}  // namespace lstc
