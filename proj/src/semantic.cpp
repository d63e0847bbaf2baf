// SPDX-License-Identifier: Apache-2.0

#include "lstc/semantic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lstc/error.hpp"
#include "lstc/process.hpp"
#include "lstc/rng.hpp"

namespace lstc {

namespace {

std::vector<std::string> word_tokens(const Chunk& chunk, const TokenSpans& spans) {
  std::vector<std::string> out;
  for (auto i : word_span_indices(spans))
    out.push_back(units_to_utf8(UnitView(chunk.text).substr(spans[i].start, spans[i].length())));
  return out;
}

std::size_t count_words(const TokenSpans& spans) {
  return static_cast<std::size_t>(std::count_if(
      spans.begin(), spans.end(), [](const TokenSpan& s) { return s.kind == SpanKind::word; }));
}

std::string format_alpha(double alpha) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, alpha);
  return std::string(buf, end);
}

}  // namespace

void check_alignment(const SurprisalScores& scores, const TokenSpans& spans) {
  const std::size_t expected = count_words(spans);
  if (scores.values.size() != expected)
    throw AlignmentError("surprisal for chunk '" + scores.chunk_id + "' has " +
                         std::to_string(scores.values.size()) + " scores, expected " +
                         std::to_string(expected) + " (one per word span)");
  for (double v : scores.values)
    if (!std::isfinite(v) || v < 0.0)
      throw AlignmentError("surprisal for chunk '" + scores.chunk_id + "' contains a value < 0 or non-finite");
}

FileSurprisalProvider::FileSurprisalProvider(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open surprisal file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  parse(buf.str(), path);
}

FileSurprisalProvider FileSurprisalProvider::from_string(std::string_view jsonl,
                                                         const std::string& source) {
  FileSurprisalProvider p;
  p.parse(jsonl, source);
  return p;
}

void FileSurprisalProvider::parse(std::string_view jsonl, const std::string& source) {
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Record r;
      r.tokens = j.at("tokens").get<std::vector<std::string>>();
      r.surprisal = j.at("surprisal").get<std::vector<double>>();
      if (r.tokens.size() != r.surprisal.size())
        throw Error("tokens and surprisal lengths differ");
      records_[j.at("id").get<std::string>()] = std::move(r);
    } catch (const std::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
}

SurprisalScores FileSurprisalProvider::scores(const Chunk& chunk, const TokenSpans& spans) {
  auto it = records_.find(chunk.id);
  if (it == records_.end()) throw AlignmentError("no surprisal record for chunk '" + chunk.id + "'");
  const auto tokens = word_tokens(chunk, spans);
  if (it->second.tokens.size() != tokens.size())
    throw AlignmentError("surprisal record for chunk '" + chunk.id + "' has " +
                         std::to_string(it->second.tokens.size()) + " tokens, expected " +
                         std::to_string(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (it->second.tokens[i] != tokens[i])
      throw AlignmentError("surprisal record for chunk '" + chunk.id + "' token " +
                           std::to_string(i) + " is '" + it->second.tokens[i] + "', expected '" +
                           tokens[i] + "'");
  SurprisalScores out{chunk.id, it->second.surprisal};
  check_alignment(out, spans);
  return out;
}

ProcessSurprisalProvider::ProcessSurprisalProvider(std::string command)
    : process_(std::make_unique<LineProcess>(std::move(command))) {}

ProcessSurprisalProvider::~ProcessSurprisalProvider() = default;

SurprisalScores ProcessSurprisalProvider::scores(const Chunk& chunk, const TokenSpans& spans) {
  nlohmann::json req = {{"id", chunk.id}, {"tokens", word_tokens(chunk, spans)}};
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(process_->request(req.dump()));
  } catch (const nlohmann::json::exception& e) {
    throw Error("surprisal helper returned malformed JSON: " + std::string(e.what()));
  }
  SurprisalScores out{chunk.id, reply.at("surprisal").get<std::vector<double>>()};
  check_alignment(out, spans);
  return out;
}

double UnigramSurprisalProvider::from_zipf(double zipf) {
  return std::max(0.0, (8.0 - zipf) * std::numbers::ln10);
}

SurprisalScores UnigramSurprisalProvider::scores(const Chunk& chunk, const TokenSpans& spans) {
  SurprisalScores out{chunk.id, {}};
  for (double z : word_zipf(chunk, spans, table_)) out.values.push_back(from_zipf(z));
  return out;
}

std::vector<double> word_zipf(const Chunk& chunk, const TokenSpans& spans,
                              const FrequencyTable& table) {
  std::vector<double> out;
  for (auto i : word_span_indices(spans))
    out.push_back(
        table.lookup(UnitView(chunk.text).substr(spans[i].start, spans[i].length())).value_or(0.0));
  return out;
}

std::vector<std::size_t> entropy_order(const std::vector<double>& surprisal) {
  std::vector<std::size_t> order(surprisal.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return surprisal[a] < surprisal[b]; });
  return order;
}

std::vector<std::size_t> frequency_order(const std::vector<double>& zipf) {
  std::vector<std::size_t> order(zipf.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return zipf[a] > zipf[b]; });
  return order;
}

std::vector<double> normalized_ranks(const std::vector<double>& keys) {
  const std::size_t n = keys.size();
  std::vector<double> ranks(n, 0.0);
  if (n <= 1) return ranks;
  const auto order = entropy_order(keys);  // ascending, positional ties
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && keys[order[j + 1]] == keys[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg / static_cast<double>(n - 1);
    i = j + 1;
  }
  return ranks;
}

HybridConfig::HybridConfig(double a) : alpha(a) {
  if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("hybrid alpha must lie in [0, 1]");
}

std::vector<double> hybrid_scores(const std::vector<double>& zipf,
                                  const std::vector<double>& surprisal, const HybridConfig& cfg) {
  if (zipf.size() != surprisal.size()) throw AlignmentError("hybrid: zipf and surprisal sizes differ");
  std::vector<double> negated(zipf.size());
  std::transform(zipf.begin(), zipf.end(), negated.begin(), [](double z) { return -z; });
  const auto freq_norm = normalized_ranks(negated);
  const auto surp_norm = normalized_ranks(surprisal);
  std::vector<double> combined(zipf.size());
  for (std::size_t i = 0; i < zipf.size(); ++i)
    combined[i] = cfg.alpha * freq_norm[i] + (1.0 - cfg.alpha) * surp_norm[i];
  return combined;
}

std::vector<std::size_t> hybrid_order(const std::vector<double>& zipf,
                                      const std::vector<double>& surprisal, const HybridConfig& cfg) {
  return entropy_order(hybrid_scores(zipf, surprisal, cfg));
}

DeletionMask delete_tokens_in_order(const Chunk& chunk, const TokenSpans& spans,
                                    const std::vector<std::size_t>& word_order,
                                    std::size_t target_kept, std::string strategy) {
  const std::size_t length = chunk.length();
  DeletionMask mask{std::vector<bool>(length, true), std::move(strategy), std::nullopt};
  std::size_t kept = length;
  auto& keep = mask.keep;
  const auto words = word_span_indices(spans);

  auto live = [&](const TokenSpan& s) {
    std::vector<std::size_t> out;
    for (auto u = s.start; u < s.end; ++u)
      if (keep[u]) out.push_back(u);
    return out;
  };
  auto remove = [&](const std::vector<std::size_t>& edit) {
    const std::size_t take = std::min(edit.size(), kept - target_kept);
    for (std::size_t k = 0; k < take; ++k) keep[edit[k]] = false;
    kept -= take;
  };

  for (auto w : word_order) {
    if (kept <= target_kept) break;
    const std::size_t si = words.at(w);
    // word units from the end first, so a partial trim keeps the word's prefix
    auto edit = live(spans[si]);
    std::reverse(edit.begin(), edit.end());
    std::vector<std::size_t> ws;
    if (si + 1 < spans.size() && spans[si + 1].kind == SpanKind::whitespace) ws = live(spans[si + 1]);
    if (ws.empty() && si > 0 && spans[si - 1].kind == SpanKind::whitespace) ws = live(spans[si - 1]);
    edit.insert(edit.end(), ws.begin(), ws.end());
    remove(edit);
  }

  // Words exhausted: remaining non-whitespace units, then whitespace, left to right.
  for (bool whitespace_pass : {false, true}) {
    for (const auto& s : spans) {
      if (kept <= target_kept) break;
      if ((s.kind == SpanKind::whitespace) != whitespace_pass) continue;
      remove(live(s));
    }
  }
  return mask;
}

DeletionMask entropy_delete(const Chunk& chunk, const RetentionBudget& budget,
                            const TokenSpans& spans, const SurprisalScores& scores, uint64_t seed) {
  check_alignment(scores, spans);
  auto mask = delete_tokens_in_order(chunk, spans, entropy_order(scores.values),
                                     budget.target_kept(chunk.length()), "entropy");
  mask.seed = seed;
  return mask;
}

std::vector<Bucket> surprisal_tertiles(const std::vector<double>& surprisal) {
  const std::size_t n = surprisal.size();
  std::vector<Bucket> out(n, Bucket::t_mid);
  if (n < 3) return out;
  const auto order = entropy_order(surprisal);
  std::size_t group_start = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && surprisal[order[r]] != surprisal[order[r - 1]]) group_start = r;
    const std::size_t tertile = 3 * group_start / n;
    out[order[r]] = tertile == 0 ? Bucket::t_low : tertile == 1 ? Bucket::t_mid : Bucket::t_high;
  }
  return out;
}

BucketProfile tertile_profile(const TokenSpans& spans, const SurprisalScores& scores) {
  check_alignment(scores, spans);
  const auto tertiles = surprisal_tertiles(scores.values);
  std::vector<Bucket> assignment(spans.size(), Bucket::others);
  std::size_t w = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    switch (spans[i].kind) {
      case SpanKind::word: assignment[i] = tertiles[w++]; break;
      case SpanKind::punct: assignment[i] = Bucket::punct; break;
      case SpanKind::whitespace: assignment[i] = Bucket::whitespace; break;
      default: assignment[i] = Bucket::others; break;
    }
  }
  return make_profile(spans, std::move(assignment), calibration_buckets(CalibrationScheme::tertile));
}

CalibrationTable calibrate_tertiles(const std::vector<Chunk>& corpus, SurprisalProvider& surprisal,
                                   ReconstructionClient& decoder, SimilarityProvider& similarity,
                                   const CalibrationOptions& options) {
  std::vector<TokenSpans> spans;
  std::vector<BucketProfile> profiles;
  for (const auto& c : corpus) {
    spans.push_back(tokenize(c));
    profiles.push_back(tertile_profile(spans.back(), surprisal.scores(c, spans.back())));
  }
  return calibrate_prepared(corpus, spans, profiles, CalibrationScheme::tertile, decoder,
                            similarity, options);
}

namespace {

// Applies per-bucket quotas. Word tokens of a bucket go lowest surprisal
// first (the last one trimmed from its end); whatever quota remains, and
// buckets without words, are filled by seeded uniform sampling.
void delete_by_surprisal_within_buckets(std::vector<bool>& keep, const TokenSpans& spans,
                                        const BucketProfile& profile,
                                        const std::vector<std::size_t>& quota,
                                        const std::vector<double>& surprisal, Rng& rng) {
  const auto words = word_span_indices(spans);
  const auto order = entropy_order(surprisal);
  std::vector<std::size_t> remaining = quota;
  for (std::size_t k = 0; k < profile.buckets.size(); ++k) {
    for (auto w : order) {
      if (remaining[k] == 0) break;
      const auto si = words[w];
      if (profile.assignment[si] != profile.buckets[k]) continue;
      for (auto u = spans[si].end; u-- > spans[si].start && remaining[k] > 0;) {
        if (!keep[u]) continue;
        keep[u] = false;
        --remaining[k];
      }
    }
  }
  delete_uniform_per_bucket(keep, unit_buckets(spans, profile, keep.size()), profile, remaining, rng);
}

Skeleton allocate_and_delete(const Chunk& chunk, const RetentionBudget& budget,
                             const TokenSpans& spans, const SurprisalScores& scores,
                             const BucketProfile& profile, const CalibrationTable& calib,
                             uint64_t seed, std::string strategy) {
  const std::size_t length = chunk.length();
  const std::size_t deletions = length - budget.target_kept(length);
  const auto weights = solve_allocation(profile, calib, budget.r_keep);
  DeletionMask mask{std::vector<bool>(length, true), std::move(strategy), seed};
  if (deletions > 0) {
    Rng rng(seed);
    delete_by_surprisal_within_buckets(mask.keep, spans, profile,
                                       allocation_quota(profile, weights, deletions), scores.values,
                                       rng);
  }
  nlohmann::json extra;
  extra["w"] = weights_to_json(weights);
  return make_skeleton(chunk, budget, mask, std::move(extra));
}

}  // namespace

Skeleton entropy_lp_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                           const SurprisalScores& scores, const CalibrationTable& calib,
                           uint64_t seed) {
  const auto profile = tertile_profile(spans, scores);
  return allocate_and_delete(chunk, budget, spans, scores, profile, calib, seed, "entropy_lp");
}

Skeleton entropy_in_freqbuckets_delete(const Chunk& chunk, const RetentionBudget& budget,
                                       const TokenSpans& spans, const SurprisalScores& scores,
                                       const BucketProfile& profile, const CalibrationTable& calib,
                                       uint64_t seed) {
  check_alignment(scores, spans);
  return allocate_and_delete(chunk, budget, spans, scores, profile, calib, seed, "entropy_freqbkt");
}

Skeleton hybrid_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                       const SurprisalScores& scores, const FrequencyTable& table,
                       const HybridConfig& cfg, uint64_t seed) {
  check_alignment(scores, spans);
  const auto order = hybrid_order(word_zipf(chunk, spans, table), scores.values, cfg);
  auto mask = delete_tokens_in_order(chunk, spans, order, budget.target_kept(chunk.length()),
                                     "hybrid@" + format_alpha(cfg.alpha));
  mask.seed = seed;
  nlohmann::json extra;
  extra["alpha"] = cfg.alpha;
  return make_skeleton(chunk, budget, mask, std::move(extra));
}

}  // namespace lstc
