// SPDX-License-Identifier: Apache-2.0

#include "lstc/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lstc/error.hpp"
#include "lstc/rng.hpp"

namespace lstc {

std::size_t DeletionMask::kept() const {
  return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true));
}

DeletionMask identity_mask(std::size_t length, std::string strategy) {
  return {std::vector<bool>(length, true), std::move(strategy), std::nullopt};
}

UnitString apply_mask(UnitView text, const DeletionMask& mask) {
  if (mask.keep.size() != text.size()) throw Error("mask length does not match text length");
  UnitString out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i)
    if (mask.keep[i]) out.push_back(text[i]);
  return out;
}

bool is_subsequence(UnitView candidate, UnitView original) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < original.size() && j < candidate.size(); ++i)
    if (original[i] == candidate[j]) ++j;
  return j == candidate.size();
}

Skeleton make_skeleton(const Chunk& chunk, const RetentionBudget& budget, const DeletionMask& mask,
                       nlohmann::json extra) {
  Skeleton s;
  s.id = chunk.id;
  s.strategy = mask.strategy;
  s.r_keep = budget.r_keep;
  s.seed = mask.seed;
  s.original_len = chunk.length();
  s.text = apply_mask(chunk.text, mask);
  s.extra = std::move(extra);
  return s;
}

DeletionMask step_delete(const Chunk& chunk, const RetentionBudget& budget) {
  const std::size_t length = chunk.length();
  const std::size_t kept = budget.target_kept(length);
  DeletionMask mask{std::vector<bool>(length, false), "step", std::nullopt};
  // Bresenham-style schedule: consecutive kept positions differ by floor or
  // ceil of L/K, the two stride sizes bracketing 1/r_keep.
  for (std::size_t j = 0; j < kept; ++j) mask.keep[j * length / kept] = true;
  return mask;
}

StochasticDist parse_stochastic_dist(std::string_view name) {
  if (name == "gaussian") return StochasticDist::gaussian;
  if (name == "bernoulli") return StochasticDist::bernoulli;
  if (name == "poisson") return StochasticDist::poisson;
  throw ConfigError("unknown stochastic distribution '" + std::string(name) + "'");
}

std::string_view stochastic_dist_name(StochasticDist dist) {
  switch (dist) {
    case StochasticDist::gaussian: return "gaussian";
    case StochasticDist::bernoulli: return "bernoulli";
    case StochasticDist::poisson: return "poisson";
  }
  return "?";
}

namespace {

// Nearest still-kept position to `target`, searching left first on ties.
std::size_t nearest_kept(const std::vector<bool>& keep, std::size_t target) {
  const std::size_t n = keep.size();
  if (keep[target]) return target;
  for (std::size_t d = 1; d < n; ++d) {
    if (target >= d && keep[target - d]) return target - d;
    if (target + d < n && keep[target + d]) return target + d;
  }
  throw Error("no position left to delete");
}

}  // namespace

DeletionMask stochastic_delete(const Chunk& chunk, const RetentionBudget& budget, StochasticDist dist,
                               uint64_t seed, const StochasticParams& params) {
  const std::size_t length = chunk.length();
  const std::size_t deletions = length - budget.target_kept(length);
  DeletionMask mask{std::vector<bool>(length, true), std::string(stochastic_dist_name(dist)), seed};
  if (deletions == 0) return mask;
  Rng rng(seed);

  switch (dist) {
    case StochasticDist::bernoulli: {
      // iid uniform score per unit; the D lowest scores are deleted
      std::vector<std::pair<double, std::size_t>> scored(length);
      for (std::size_t i = 0; i < length; ++i) scored[i] = {rng.uniform(), i};
      std::sort(scored.begin(), scored.end());
      for (std::size_t k = 0; k < deletions; ++k) mask.keep[scored[k].second] = false;
      break;
    }
    case StochasticDist::gaussian: {
      const double spacing = static_cast<double>(length) / static_cast<double>(deletions);
      const double sigma = params.gaussian_sigma_fraction * spacing;
      const double max_pos = static_cast<double>(length - 1);
      for (std::size_t j = 0; j < deletions; ++j) {
        const double center = (static_cast<double>(j) + 0.5) * spacing - 0.5;
        const double jittered = std::clamp(std::round(center + sigma * rng.normal()), 0.0, max_pos);
        mask.keep[nearest_kept(mask.keep, static_cast<std::size_t>(jittered))] = false;
      }
      break;
    }
    case StochasticDist::poisson: {
      // Poisson process over the unit line with exponential gaps, wrapping
      // around until D distinct positions have been scheduled.
      const double mean_gap = static_cast<double>(length) /
                              (static_cast<double>(deletions) * params.poisson_rate_scale);
      double x = 0.0;
      std::size_t removed = 0;
      while (removed < deletions) {
        x += rng.exponential(mean_gap);
        const auto pos = static_cast<std::size_t>(std::fmod(x, static_cast<double>(length)));
        if (pos < length && mask.keep[pos]) {
          mask.keep[pos] = false;
          ++removed;
        }
      }
      break;
    }
  }
  return mask;
}

namespace {

bool is_vowel(char32_t c) {
  switch (c) {
    case U'a': case U'e': case U'i': case U'o': case U'u':
    case U'A': case U'E': case U'I': case U'O': case U'U':
      return true;
    default:
      return false;
  }
}

class StagedEditor {
 public:
  StagedEditor(std::vector<bool>& keep, std::size_t lo, std::size_t hi)
      : keep_(keep), kept_(keep.size()), lo_(lo), hi_(hi) {}

  bool done() const { return kept_ <= hi_; }

  // Applies one edit. Units already deleted are ignored. If the whole edit
  // would overshoot the lower bound, only the leading units needed are removed.
  bool apply(const std::vector<std::size_t>& units) {
    if (done()) return true;
    std::vector<std::size_t> live;
    for (auto u : units)
      if (keep_[u]) live.push_back(u);
    std::size_t take = live.size();
    if (kept_ - take < lo_) take = kept_ - hi_;
    for (std::size_t k = 0; k < take; ++k) keep_[live[k]] = false;
    kept_ -= take;
    return done();
  }

  std::size_t kept_in(const TokenSpan& s) const {
    std::size_t n = 0;
    for (auto u = s.start; u < s.end; ++u) n += keep_[u] ? 1 : 0;
    return n;
  }

  std::vector<std::size_t> live_units(const TokenSpan& s) const {
    std::vector<std::size_t> out;
    for (auto u = s.start; u < s.end; ++u)
      if (keep_[u]) out.push_back(u);
    return out;
  }

  const std::vector<bool>& keep() const { return keep_; }

 private:
  std::vector<bool>& keep_;
  std::size_t kept_;
  std::size_t lo_;
  std::size_t hi_;
};

}  // namespace

WordLenResult wordlen_delete_traced(const Chunk& chunk, const RetentionBudget& budget, uint64_t seed,
                                    const WordLenParams& params) {
  const std::size_t length = chunk.length();
  const std::size_t hi = budget.target_kept(length);
  const double eps = budget.epsilon > 0.0 ? budget.epsilon : params.epsilon;
  const std::size_t lo = round_half_up_units(std::max(0.0, budget.r_keep - eps), length);

  WordLenResult result{identity_mask(length, "wordlen"), 0};
  result.mask.seed = seed;
  StagedEditor ed(result.mask.keep, lo, hi);
  if (ed.done()) return result;

  const TokenSpans spans = tokenize(chunk);
  const UnitView text(chunk.text);
  auto run_stage = [&](int stage, auto&& body) {
    if (ed.done()) return;
    result.last_stage = stage;
    body();
  };

  // 1: whitespace runs collapse to their first unit
  run_stage(1, [&] {
    for (const auto& s : spans) {
      if (s.kind != SpanKind::whitespace || s.length() < 2) continue;
      std::vector<std::size_t> extra;
      for (auto u = s.start + 1; u < s.end; ++u) extra.push_back(u);
      if (ed.apply(extra)) return;
    }
  });

  // 2: vowels inside words of length >= 3, never the first unit
  run_stage(2, [&] {
    for (const auto& s : spans) {
      if (s.kind != SpanKind::word || s.length() < params.vowel_min_len) continue;
      for (auto u = s.start + 1; u < s.end; ++u)
        if (is_vowel(text[u]) && ed.apply({u})) return;
    }
  });

  // 3: whole short words, taking one adjacent whitespace unit along
  run_stage(3, [&] {
    for (std::size_t i = 0; i < spans.size(); ++i) {
      const auto& s = spans[i];
      if (s.kind != SpanKind::word) continue;
      const std::size_t live = ed.kept_in(s);
      if (live == 0 || live > params.short_word_max) continue;
      auto edit = ed.live_units(s);
      std::optional<std::size_t> ws;
      if (i + 1 < spans.size() && spans[i + 1].kind == SpanKind::whitespace) {
        auto units = ed.live_units(spans[i + 1]);
        if (!units.empty()) ws = units.front();
      }
      if (!ws && i > 0 && spans[i - 1].kind == SpanKind::whitespace) {
        auto units = ed.live_units(spans[i - 1]);
        if (!units.empty()) ws = units.back();
      }
      if (ws) edit.push_back(*ws);
      if (ed.apply(edit)) return;
    }
  });

  // 4: long words keep their first few units
  run_stage(4, [&] {
    for (const auto& s : spans) {
      if (s.kind != SpanKind::word) continue;
      auto live = ed.live_units(s);
      if (live.size() < params.long_word_min) continue;
      std::vector<std::size_t> tail(live.begin() + static_cast<std::ptrdiff_t>(params.truncate_to),
                                    live.end());
      if (ed.apply(tail)) return;
    }
  });

  // 5: punctuation and digits
  run_stage(5, [&] {
    for (const auto& s : spans) {
      if (s.kind != SpanKind::punct && s.kind != SpanKind::digit_run) continue;
      for (auto u = s.start; u < s.end; ++u)
        if (ed.apply({u})) return;
    }
  });

  // 6: seeded uniform fallback
  run_stage(6, [&] {
    std::vector<std::size_t> live;
    for (std::size_t u = 0; u < length; ++u)
      if (ed.keep()[u]) live.push_back(u);
    Rng rng(seed);
    for (auto k : rng.sample_without_replacement(live.size(), live.size()))
      if (ed.apply({live[k]})) return;
  });

  return result;
}

DeletionMask wordlen_delete(const Chunk& chunk, const RetentionBudget& budget, uint64_t seed,
                            const WordLenParams& params) {
  return wordlen_delete_traced(chunk, budget, seed, params).mask;
}

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights,
                                   const std::vector<std::size_t>& capacity) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n, 0);
  if (total == 0) return out;
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const std::size_t room = std::accumulate(capacity.begin(), capacity.end(), std::size_t{0});
  if (room < total) throw Error("apportion: total exceeds capacity");
  if (!(sum > 0.0)) throw Error("apportion: weights sum to zero");

  std::vector<double> remainder(n, 0.0);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double quota = static_cast<double>(total) * weights[k] / sum;
    auto base = static_cast<std::size_t>(std::floor(quota + 1e-9));
    base = std::min(base, capacity[k]);
    out[k] = base;
    remainder[k] = quota - static_cast<double>(base);
    assigned += base;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // One seat per bucket in remainder order; repeat only when capacity clamps forced leftovers.
  while (assigned < total) {
    bool progressed = false;
    for (auto k : order) {
      if (assigned == total) break;
      if (out[k] < capacity[k] && (weights[k] > 0.0 || remainder[k] > 0.0)) {
        ++out[k];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) {
      for (auto k : order) {
        if (assigned == total) break;
        if (out[k] < capacity[k]) {
          ++out[k];
          ++assigned;
        }
      }
    }
  }
  return out;
}

void delete_uniform_per_bucket(std::vector<bool>& keep, const std::vector<Bucket>& unit_labels,
                               const BucketProfile& profile, const std::vector<std::size_t>& quota,
                               Rng& rng) {
  for (std::size_t k = 0; k < profile.buckets.size(); ++k) {
    if (quota[k] == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t u = 0; u < unit_labels.size(); ++u)
      if (unit_labels[u] == profile.buckets[k] && keep[u]) members.push_back(u);
    if (members.size() < quota[k])
      throw Error("bucket " + std::string(bucket_name(profile.buckets[k])) +
                  " has fewer units than its deletion quota");
    for (auto idx : rng.sample_without_replacement(members.size(), quota[k]))
      keep[members[idx]] = false;
  }
}

DeletionMask wordfreq_delete(const Chunk& chunk, const RetentionBudget& budget,
                             const TokenSpans& spans, const BucketProfile& profile, uint64_t seed) {
  const std::size_t length = chunk.length();
  const std::size_t deletions = length - budget.target_kept(length);
  DeletionMask mask{std::vector<bool>(length, true), "wordfreq", seed};
  if (deletions == 0) return mask;
  const auto quota = apportion(deletions, profile.p, profile.counts);
  Rng rng(seed);
  delete_uniform_per_bucket(mask.keep, unit_buckets(spans, profile, length), profile, quota, rng);
  return mask;
}

}  // namespace lstc
