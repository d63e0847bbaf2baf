// SPDX-License-Identifier: Apache-2.0

#include "lstc/allocation.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <thread>

#include "lstc/decoder.hpp"
#include "lstc/error.hpp"
#include "lstc/log.hpp"
#include "lstc/metrics.hpp"
#include "lstc/rng.hpp"

namespace lstc {

std::string_view calibration_scheme_name(CalibrationScheme s) {
  switch (s) {
    case CalibrationScheme::three_class: return "3";
    case CalibrationScheme::six_class: return "6";
    case CalibrationScheme::tertile: return "tertile";
  }
  return "?";
}

CalibrationScheme parse_calibration_scheme(std::string_view name) {
  if (name == "3") return CalibrationScheme::three_class;
  if (name == "6") return CalibrationScheme::six_class;
  if (name == "tertile") return CalibrationScheme::tertile;
  throw ConfigError("unknown calibration scheme '" + std::string(name) + "'");
}

std::vector<Bucket> calibration_buckets(CalibrationScheme s) {
  switch (s) {
    case CalibrationScheme::three_class: return {Bucket::low, Bucket::mid, Bucket::high};
    case CalibrationScheme::six_class:
      return {Bucket::low, Bucket::mid, Bucket::high, Bucket::punct, Bucket::others, Bucket::whitespace};
    case CalibrationScheme::tertile:
      return {Bucket::t_low, Bucket::t_mid, Bucket::t_high, Bucket::punct, Bucket::others,
              Bucket::whitespace};
  }
  return {};
}

double CalibrationTable::at(Bucket b) const {
  auto it = b_full.find(b);
  if (it == b_full.end())
    throw ConfigError("calibration table has no entry for bucket " + std::string(bucket_name(b)));
  return it->second;
}

CalibrationTable calibration_from_json(const nlohmann::json& j) {
  CalibrationTable table;
  table.scheme = parse_calibration_scheme(j.at("scheme").get<std::string>());
  for (const auto& [name, value] : j.at("b_full").items()) {
    auto bucket = parse_bucket(name);
    if (!bucket) throw ConfigError("unknown bucket '" + name + "' in calibration table");
    const double v = value.get<double>();
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("b_full for " + name + " must lie in [0, 1]");
    table.b_full[*bucket] = v;
  }
  if (j.contains("absent"))
    for (const auto& name : j["absent"]) {
      auto bucket = parse_bucket(name.get<std::string>());
      if (bucket) table.absent.push_back(*bucket);
    }
  if (j.contains("provenance")) table.provenance = j["provenance"];
  return table;
}

nlohmann::json calibration_to_json(const CalibrationTable& table) {
  nlohmann::json j;
  j["scheme"] = std::string(calibration_scheme_name(table.scheme));
  j["b_full"] = nlohmann::json::object();
  for (const auto& [b, v] : table.b_full) j["b_full"][std::string(bucket_name(b))] = v;
  if (!table.absent.empty()) {
    j["absent"] = nlohmann::json::array();
    for (auto b : table.absent) j["absent"].push_back(std::string(bucket_name(b)));
  }
  j["provenance"] = table.provenance;
  return j;
}

CalibrationTable load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open calibration table '" + path + "'");
  try {
    return calibration_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, e.what());
  }
}

void save_calibration(const CalibrationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << calibration_to_json(table).dump(2) << '\n';
}

double AllocationWeights::weight(Bucket b) const {
  for (std::size_t i = 0; i < buckets.size(); ++i)
    if (buckets[i] == b) return w[i];
  return 0.0;
}

double bucket_score(double w, double b_full) {
  if (!(w >= 0.0 && w <= 1.0)) throw Error("bucket_score: w must lie in [0, 1]");
  if (!(b_full >= 0.0 && b_full <= 1.0)) throw Error("bucket_score: b_full must lie in [0, 1]");
  return 1.0 - w * (1.0 - b_full);
}

double allocation_objective(const std::vector<double>& p, const std::vector<double>& b_full,
                            const std::vector<double>& w) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += p[k] * (1.0 - w[k] * (1.0 - b_full[k]));
  return total;
}

std::vector<double> solve_allocation_greedy(const std::vector<double>& p,
                                            const std::vector<double>& b_full, double r_keep,
                                            const std::vector<int>& tie_rank) {
  const std::size_t n = p.size();
  if (b_full.size() != n) throw Error("solve_allocation: p and b_full sizes differ");
  if (!(r_keep > 0.0 && r_keep <= 1.0)) throw Error("solve_allocation: r_keep must lie in (0, 1]");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ca = 1.0 - b_full[a];
    const double cb = 1.0 - b_full[b];
    if (ca != cb) return ca < cb;
    if (!tie_rank.empty()) return tie_rank[a] < tie_rank[b];
    return false;
  });

  std::vector<double> w(n, 0.0);
  double remaining = 1.0 - r_keep;
  for (auto k : order) {
    if (remaining <= 0.0) break;
    if (p[k] <= 0.0) continue;
    if (p[k] <= remaining) {
      w[k] = 1.0;
      remaining -= p[k];
    } else {
      w[k] = remaining / p[k];
      remaining = 0.0;
    }
  }
  return w;
}

AllocationWeights solve_allocation(const BucketProfile& profile, const CalibrationTable& calib,
                                   double r_keep) {
  std::vector<double> b_full;
  std::vector<int> ranks;
  for (auto b : profile.buckets) {
    b_full.push_back(calib.at(b));
    ranks.push_back(bucket_tie_rank(b));
  }
  AllocationWeights out;
  out.buckets = profile.buckets;
  out.r_keep = r_keep;
  out.w = solve_allocation_greedy(profile.p, b_full, r_keep, ranks);
  out.objective = allocation_objective(profile.p, b_full, out.w);
  return out;
}

std::vector<std::size_t> allocation_quota(const BucketProfile& profile,
                                          const AllocationWeights& weights, std::size_t deletions) {
  std::vector<double> targets(profile.buckets.size(), 0.0);
  for (std::size_t k = 0; k < profile.buckets.size(); ++k)
    targets[k] = weights.weight(profile.buckets[k]) * static_cast<double>(profile.counts[k]);
  return apportion(deletions, targets, profile.counts);
}

nlohmann::json weights_to_json(const AllocationWeights& weights) {
  nlohmann::json w = nlohmann::json::object();
  for (std::size_t k = 0; k < weights.buckets.size(); ++k)
    w[std::string(bucket_name(weights.buckets[k]))] = weights.w[k];
  return w;
}

Skeleton opt_delete(const Chunk& chunk, const RetentionBudget& budget, const TokenSpans& spans,
                    const BucketProfile& profile, const CalibrationTable& calib, uint64_t seed) {
  const std::size_t length = chunk.length();
  const std::size_t deletions = length - budget.target_kept(length);
  const AllocationWeights weights = solve_allocation(profile, calib, budget.r_keep);

  DeletionMask mask{std::vector<bool>(length, true), "opt", seed};
  if (deletions > 0) {
    const auto quota = allocation_quota(profile, weights, deletions);
    Rng rng(seed);
    delete_uniform_per_bucket(mask.keep, unit_buckets(spans, profile, length), profile, quota, rng);
  }
  nlohmann::json extra;
  extra["w"] = weights_to_json(weights);
  return make_skeleton(chunk, budget, mask, std::move(extra));
}

CalibrationTable calibrate_prepared(const std::vector<Chunk>& corpus,
                                   const std::vector<TokenSpans>& spans,
                                   const std::vector<BucketProfile>& profiles,
                                   CalibrationScheme scheme, ReconstructionClient& decoder,
                                   SimilarityProvider& similarity, const CalibrationOptions& options) {
  if (spans.size() != corpus.size() || profiles.size() != corpus.size())
    throw Error("calibration: spans/profiles do not match the corpus");
  const auto buckets = calibration_buckets(scheme);

  struct Task {
    std::size_t bucket;
    std::size_t chunk;
    std::optional<double> score;
  };
  std::vector<Task> tasks;
  for (std::size_t b = 0; b < buckets.size(); ++b)
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (profiles[i].count(buckets[b]) > 0) tasks.push_back({b, i, std::nullopt});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      auto& task = tasks[t];
      const auto bucket = buckets[task.bucket];
      const auto& chunk = corpus[task.chunk];
      const auto labels = unit_buckets(spans[task.chunk], profiles[task.chunk], chunk.length());
      DeletionMask mask{std::vector<bool>(chunk.length(), true), "calibrate", std::nullopt};
      for (std::size_t u = 0; u < labels.size(); ++u)
        if (labels[u] == bucket) mask.keep[u] = false;

      ReconstructionRequest req;
      req.chunk_id = chunk.id;
      req.skeleton = apply_mask(chunk.text, mask);
      req.original_len_estimate = chunk.length();
      req.lang = chunk.lang;
      req.strategy = "calibrate";
      try {
        const auto result = decoder.reconstruct(req);
        task.score = similarity.score(chunk.text, result.text);
      } catch (const Error& e) {
        warn("calibration: chunk '" + chunk.id + "' bucket " + std::string(bucket_name(bucket)) +
             ": " + e.what());
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  CalibrationTable out;
  out.scheme = scheme;
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    double sum = 0.0;
    std::size_t ok = 0;
    std::size_t present = 0;
    for (const auto& task : tasks) {
      if (task.bucket != b) continue;
      ++present;
      if (task.score) {
        sum += *task.score;
        ++ok;
      }
    }
    const std::string name(bucket_name(buckets[b]));
    if (present == 0) {
      out.b_full[buckets[b]] = 1.0;
      out.absent.push_back(buckets[b]);
    } else if (ok == 0) {
      throw Error("calibration failed for bucket " + name + ": every chunk failed");
    } else {
      out.b_full[buckets[b]] = sum / static_cast<double>(ok);
    }
    counts[name] = {{"chunks", present}, {"scored", ok}, {"failed", present - ok}};
  }

  out.provenance = {{"corpus", options.corpus_id},
                    {"date", options.date},
                    {"chunks", corpus.size()},
                    {"decoder", decoder.endpoint_name()},
                    {"similarity", similarity.name()},
                    {"counts", counts}};
  return out;
}

CalibrationTable calibrate(const std::vector<Chunk>& corpus, const FrequencyTable& table,
                           BucketMode mode, ReconstructionClient& decoder,
                           SimilarityProvider& similarity, const CalibrationOptions& options) {
  const BucketScheme scheme{mode};
  std::vector<TokenSpans> spans;
  std::vector<BucketProfile> profiles;
  spans.reserve(corpus.size());
  profiles.reserve(corpus.size());
  for (const auto& c : corpus) {
    spans.push_back(tokenize(c));
    profiles.push_back(classify(c, spans.back(), table, scheme));
  }
  return calibrate_prepared(corpus, spans, profiles,
                            mode == BucketMode::three_class ? CalibrationScheme::three_class
                                                            : CalibrationScheme::six_class,
                            decoder, similarity, options);
}

}  // namespace lstc
