// SPDX-License-Identifier: Apache-2.0

#include "lstc/frequency.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lstc/error.hpp"

namespace lstc {

namespace {

constexpr std::array<std::string_view, kBucketCount> kBucketNames = {
    "LOW", "MID", "HIGH", "PUNCT", "OTHERS", "WHITESPACE", "T_LOW", "T_MID", "T_HIGH"};

}  // namespace

std::string_view bucket_name(Bucket b) { return kBucketNames[static_cast<std::size_t>(b)]; }

std::optional<Bucket> parse_bucket(std::string_view name) {
  for (std::size_t i = 0; i < kBucketCount; ++i)
    if (kBucketNames[i] == name) return static_cast<Bucket>(i);
  return std::nullopt;
}

int bucket_tie_rank(Bucket b) {
  switch (b) {
    case Bucket::whitespace: return 0;
    case Bucket::punct: return 1;
    case Bucket::others: return 2;
    case Bucket::high: return 3;
    case Bucket::t_low: return 4;
    case Bucket::mid: return 5;
    case Bucket::t_mid: return 6;
    case Bucket::low: return 7;
    case Bucket::t_high: return 8;
  }
  return 9;
}

void FrequencyTable::set(std::string_view word, double zipf) {
  entries_[lowercase_utf8(utf8_to_units(word))] = zipf;
}

std::optional<double> FrequencyTable::lookup(std::string_view word) const {
  return lookup(UnitView(utf8_to_units(word)));
}

std::optional<double> FrequencyTable::lookup(UnitView word) const {
  auto it = entries_.find(lowercase_utf8(word));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

FrequencyTable parse_frequency_table(std::string_view tsv, const std::string& source_name) {
  FrequencyTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    std::size_t eol = tsv.find('\n', pos);
    if (eol == std::string_view::npos) eol = tsv.size();
    std::string_view line = tsv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw ParseError(source_name, line_no, "expected `word<TAB>zipf`");
    std::string_view value = line.substr(tab + 1);
    double zipf = 0.0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), zipf);
    if (ec != std::errc() || end != value.data() + value.size())
      throw ParseError(source_name, line_no, "non-numeric zipf '" + std::string(value) + "'");
    if (!std::isfinite(zipf) || zipf < 0.0)
      throw ParseError(source_name, line_no, "zipf must be finite and >= 0");
    try {
      table.set(line.substr(0, tab), zipf);
    } catch (const Error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  if (table.size() == 0) throw ParseError(source_name, 0, "frequency table is empty");
  return table;
}

FrequencyTable load_frequency_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open frequency table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_frequency_table(buf.str(), path);
}

std::string_view bucket_mode_name(BucketMode mode) {
  return mode == BucketMode::three_class ? "3" : "6";
}

BucketMode parse_bucket_mode(std::string_view name) {
  if (name == "3") return BucketMode::three_class;
  if (name == "6") return BucketMode::six_class;
  throw ConfigError("bucket mode must be 3 or 6, got '" + std::string(name) + "'");
}

std::vector<Bucket> BucketScheme::buckets() const {
  if (mode == BucketMode::three_class) return {Bucket::low, Bucket::mid, Bucket::high};
  return {Bucket::low, Bucket::mid, Bucket::high, Bucket::punct, Bucket::others, Bucket::whitespace};
}

Bucket BucketScheme::zipf_bucket(std::optional<double> zipf) const {
  if (!zipf || *zipf < low_hi) return Bucket::low;
  if (*zipf < mid_hi) return Bucket::mid;
  return Bucket::high;
}

std::size_t BucketProfile::index_of(Bucket b) const {
  for (std::size_t i = 0; i < buckets.size(); ++i)
    if (buckets[i] == b) return i;
  return static_cast<std::size_t>(-1);
}

double BucketProfile::mass(Bucket b) const {
  const auto i = index_of(b);
  return i < p.size() ? p[i] : 0.0;
}

std::size_t BucketProfile::count(Bucket b) const {
  const auto i = index_of(b);
  return i < counts.size() ? counts[i] : 0;
}

std::size_t BucketProfile::total_units() const {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

BucketProfile make_profile(const TokenSpans& spans, std::vector<Bucket> assignment,
                           std::vector<Bucket> buckets) {
  BucketProfile profile;
  profile.buckets = std::move(buckets);
  profile.assignment = std::move(assignment);
  profile.counts.assign(profile.buckets.size(), 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto k = profile.index_of(profile.assignment[i]);
    if (k >= profile.buckets.size())
      throw Error("span assigned to bucket " + std::string(bucket_name(profile.assignment[i])) +
                  " outside the profile");
    profile.counts[k] += spans[i].length();
    total += spans[i].length();
  }
  profile.p.assign(profile.buckets.size(), 0.0);
  if (total > 0)
    for (std::size_t k = 0; k < profile.buckets.size(); ++k)
      profile.p[k] = static_cast<double>(profile.counts[k]) / static_cast<double>(total);
  return profile;
}

BucketProfile classify(const Chunk& chunk, const TokenSpans& spans, const FrequencyTable& table,
                       const BucketScheme& scheme) {
  std::vector<Bucket> assignment(spans.size(), Bucket::low);
  const UnitView text(chunk.text);

  if (scheme.mode == BucketMode::six_class) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const auto& s = spans[i];
      switch (s.kind) {
        case SpanKind::word:
          assignment[i] = scheme.zipf_bucket(table.lookup(text.substr(s.start, s.length())));
          break;
        case SpanKind::punct: assignment[i] = Bucket::punct; break;
        case SpanKind::whitespace: assignment[i] = Bucket::whitespace; break;
        case SpanKind::digit_run:
        case SpanKind::other: assignment[i] = Bucket::others; break;
      }
    }
    return make_profile(spans, std::move(assignment), scheme.buckets());
  }

  // Three classes: words and digit runs are looked up; every other span joins
  // the class of the nearest preceding looked-up span (leading ones join the first).
  std::vector<bool> looked_up(spans.size(), false);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.kind == SpanKind::word || s.kind == SpanKind::digit_run) {
      assignment[i] = scheme.zipf_bucket(table.lookup(text.substr(s.start, s.length())));
      looked_up[i] = true;
    }
  }
  std::optional<Bucket> current;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (looked_up[i]) {
      current = assignment[i];
      break;
    }
  }
  // No words at all: everything is LOW (OOV-equivalent).
  Bucket carry = current.value_or(Bucket::low);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (looked_up[i])
      carry = assignment[i];
    else
      assignment[i] = carry;
  }
  return make_profile(spans, std::move(assignment), scheme.buckets());
}

std::vector<Bucket> unit_buckets(const TokenSpans& spans, const BucketProfile& profile,
                                 std::size_t length) {
  std::vector<Bucket> out(length, Bucket::low);
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t u = spans[i].start; u < spans[i].end; ++u) out[u] = profile.assignment[i];
  return out;
}

}  // namespace lstc
