// SPDX-License-Identifier: Apache-2.0

#include "lstc/text.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lstc/error.hpp"
#include "lstc/log.hpp"

namespace lstc {

UnitString utf8_to_units(std::string_view utf8) {
  UnitString out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) throw Error("ill-formed UTF-8 at byte " + std::to_string(i - 1));
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

std::string units_to_utf8(UnitView units) {
  std::string out;
  out.reserve(units.size());
  for (char32_t c : units) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) throw Error("code point is not a Unicode scalar value");
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

std::string_view lang_name(Lang lang) {
  return lang == Lang::english ? "english" : "presegmented";
}

Lang parse_lang(std::string_view name) {
  if (name == "english") return Lang::english;
  if (name == "presegmented") return Lang::presegmented;
  throw ConfigError("unknown lang '" + std::string(name) + "'");
}

namespace {

void check_entities(const Chunk& chunk) {
  if (!chunk.entities) return;
  for (const auto& e : *chunk.entities) {
    if (!(e.start < e.end && e.end <= chunk.length()))
      throw Error("entity '" + e.surface + "' has offsets out of range");
    if (units_to_utf8(UnitView(chunk.text).substr(e.start, e.end - e.start)) != e.surface)
      throw Error("entity '" + e.surface + "' does not match text at [" + std::to_string(e.start) +
                  "," + std::to_string(e.end) + ")");
  }
}

}  // namespace

Chunk make_chunk(std::string id, std::string_view utf8_text, Lang lang,
                 std::optional<std::vector<EntityMention>> entities) {
  Chunk chunk;
  chunk.id = std::move(id);
  chunk.text = utf8_to_units(utf8_text);
  chunk.lang = lang;
  chunk.entities = std::move(entities);
  if (chunk.text.empty()) throw Error("chunk '" + chunk.id + "' is empty");
  check_entities(chunk);
  return chunk;
}

std::string_view span_kind_name(SpanKind kind) {
  switch (kind) {
    case SpanKind::word: return "word";
    case SpanKind::punct: return "punct";
    case SpanKind::whitespace: return "whitespace";
    case SpanKind::digit_run: return "digit_run";
    case SpanKind::other: return "other";
  }
  return "other";
}

bool is_whitespace_unit(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_letter_unit(char32_t c) {
  return u_hasBinaryProperty(static_cast<UChar32>(c), UCHAR_ALPHABETIC);
}

bool is_digit_unit(char32_t c) {
  return u_charType(static_cast<UChar32>(c)) == U_DECIMAL_DIGIT_NUMBER;
}

bool is_punct_unit(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

namespace {

SpanKind english_kind(char32_t c) {
  if (is_whitespace_unit(c)) return SpanKind::whitespace;
  if (is_digit_unit(c)) return SpanKind::digit_run;
  if (is_letter_unit(c)) return SpanKind::word;
  if (is_punct_unit(c)) return SpanKind::punct;
  return SpanKind::other;
}

SpanKind presegmented_kind(char32_t c) {
  if (c == U'/' || is_whitespace_unit(c)) return SpanKind::whitespace;
  return SpanKind::word;
}

}  // namespace

TokenSpans tokenize(UnitView text, Lang lang) {
  TokenSpans spans;
  auto kind_of = lang == Lang::english ? english_kind : presegmented_kind;
  std::size_t i = 0;
  while (i < text.size()) {
    const SpanKind kind = kind_of(text[i]);
    std::size_t j = i + 1;
    // punct units never merge; everything else forms maximal runs
    if (kind != SpanKind::punct)
      while (j < text.size() && kind_of(text[j]) == kind) ++j;
    spans.push_back({i, j, kind});
    i = j;
  }
  return spans;
}

TokenSpans tokenize(const Chunk& chunk) { return tokenize(chunk.text, chunk.lang); }

std::vector<std::size_t> word_span_indices(const TokenSpans& spans) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < spans.size(); ++i)
    if (spans[i].kind == SpanKind::word) out.push_back(i);
  return out;
}

std::string lowercase_utf8(UnitView units) {
  UnitString lowered(units);
  for (auto& c : lowered) c = static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
  return units_to_utf8(lowered);
}

std::string span_key(UnitView text, const TokenSpan& span) {
  return lowercase_utf8(text.substr(span.start, span.length()));
}

RetentionBudget::RetentionBudget(double r, double eps) : r_keep(r), epsilon(eps) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("r_keep must lie in (0, 1], got " + std::to_string(r));
  if (!(eps >= 0.0)) throw ConfigError("epsilon must be >= 0");
}

std::size_t round_half_up_units(double r, std::size_t length) {
  // The slack absorbs binary representation error of grid values such as 0.15 * 10.
  const double exact = r * static_cast<double>(length);
  if (exact <= 0.0) return 0;
  const auto rounded = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
  return std::min(rounded, length);
}

std::size_t RetentionBudget::target_kept(std::size_t length) const {
  return round_half_up_units(r_keep, length);
}

Retention realized_retention(const Chunk& original, UnitView skeleton_text) {
  return {skeleton_text.size(), original.length()};
}

std::vector<Chunk> split_record(const Chunk& record, std::size_t max_chunk) {
  if (max_chunk == 0) throw ConfigError("max_chunk must be positive");
  if (record.length() <= max_chunk) return {record};

  struct Piece {
    std::size_t begin, end;
    std::optional<char32_t> sep;
  };
  std::vector<Piece> pieces;
  std::size_t begin = 0;
  const UnitString& text = record.text;
  while (text.size() - begin > max_chunk) {
    // last whitespace at or before the limit; a leading whitespace would leave an empty piece
    std::size_t cut = std::string::npos;
    for (std::size_t k = begin + max_chunk; k > begin; --k) {
      if (is_whitespace_unit(text[k])) {
        cut = k;
        break;
      }
    }
    if (cut == std::string::npos) {
      pieces.push_back({begin, begin + max_chunk, std::nullopt});
      begin += max_chunk;
    } else {
      pieces.push_back({begin, cut, text[cut]});
      begin = cut + 1;
    }
  }
  pieces.push_back({begin, text.size(), std::nullopt});

  std::vector<Chunk> out;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const Piece& p = pieces[k];
    if (p.end == p.begin) continue;  // trailing separator consumed everything
    Chunk c;
    c.id = record.id + "#" + std::to_string(k);
    c.text = text.substr(p.begin, p.end - p.begin);
    c.lang = record.lang;
    c.split_separator = p.sep;
    if (record.entities) {
      c.entities.emplace();
      for (const auto& e : *record.entities) {
        if (e.start >= p.begin && e.end <= p.end) {
          c.entities->push_back({e.surface, e.start - p.begin, e.end - p.begin});
        } else if (e.start < p.end && e.end > p.begin) {
          warn("entity '" + e.surface + "' in record '" + record.id +
               "' crosses a chunk boundary and is dropped");
        }
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

UnitString rejoin_chunks(const std::vector<Chunk>& pieces) {
  UnitString out;
  for (const auto& c : pieces) {
    out += c.text;
    if (c.split_separator) out.push_back(*c.split_separator);
  }
  return out;
}

std::vector<Chunk> ingest_corpus_stream(std::string_view jsonl, const std::string& source_name,
                                        const IngestOptions& options) {
  using nlohmann::json;
  std::vector<Chunk> chunks;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t eol = jsonl.find('\n', pos);
    if (eol == std::string_view::npos) eol = jsonl.size();
    std::string_view line = jsonl.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!record.is_object()) throw Error("record is not an object");
      Chunk chunk;
      chunk.id = record.at("id").get<std::string>();
      chunk.text = utf8_to_units(record.at("text").get<std::string>());
      if (record.contains("lang")) chunk.lang = parse_lang(record["lang"].get<std::string>());
      if (record.contains("entities")) {
        chunk.entities.emplace();
        for (const auto& e : record["entities"]) {
          chunk.entities->push_back({e.at("surface").get<std::string>(),
                                     e.at("start").get<std::size_t>(),
                                     e.at("end").get<std::size_t>()});
        }
      }
      if (chunk.text.empty()) {
        warn(source_name + ":" + std::to_string(line_no) + ": record '" + chunk.id +
             "' has empty text, skipped");
        continue;
      }
      check_entities(chunk);
      for (auto& piece : split_record(chunk, options.max_chunk)) chunks.push_back(std::move(piece));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return chunks;
}

std::vector<Chunk> ingest_corpus(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ingest_corpus_stream(buf.str(), path, options);
}

}  // namespace lstc
