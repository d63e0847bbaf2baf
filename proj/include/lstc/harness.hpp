// SPDX-License-Identifier: Apache-2.0
//
// Sweep orchestration: strategies x retention grid over a corpus, with
// persisted skeletons, reconstructions and metrics.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lstc/allocation.hpp"
#include "lstc/codec.hpp"
#include "lstc/decoder.hpp"
#include "lstc/metrics.hpp"
#include "lstc/semantic.hpp"
#include "lstc/strategies.hpp"

namespace lstc {

inline constexpr std::string_view kCodeVersion = "lstc-0.1.0";

enum class StrategyKind {
  step, gaussian, bernoulli, poisson, wordlen, wordfreq, opt,
  entropy, entropy_lp, entropy_freqbkt, hybrid, summarize
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::step;
  double alpha = 0.5;  // hybrid only

  std::string id() const;  // "step", "hybrid@0.3", ...
  bool needs_frequency_table() const;
  bool needs_calibration() const;          // opt, entropy_freqbkt
  bool needs_tertile_calibration() const;  // entropy_lp
  bool needs_surprisal() const;
  bool needs_decoder() const;              // summarize
  bool exact_rate() const;                 // everything except wordlen and summarize
};

StrategySpec parse_strategy(std::string_view id);
// Comma separated list; throws ConfigError when empty.
std::vector<StrategySpec> parse_strategy_list(std::string_view list);
// "lo:hi:step" (inclusive) or a comma separated list. Values must lie in (0, 1].
std::vector<double> parse_rkeep_grid(std::string_view grid);

// Shared read-only resources handed to every encoder call.
struct EncoderResources {
  const FrequencyTable* frequency = nullptr;
  const CalibrationTable* calibration = nullptr;
  const CalibrationTable* tertile_calibration = nullptr;
  SurprisalProvider* surprisal = nullptr;
  ReconstructionClient* decoder = nullptr;
  BucketMode bucket_mode = BucketMode::six_class;
  StochasticParams stochastic;
  WordLenParams wordlen;
};

// Throws ConfigError naming the missing command-line flag.
void check_prerequisites(const std::vector<StrategySpec>& strategies, const EncoderResources& res);

// Per-chunk work shared by every retention rate.
struct ChunkAnalysis {
  TokenSpans spans;
  std::optional<BucketProfile> three_class;
  std::optional<BucketProfile> scheme_profile;  // profile under res.bucket_mode
  std::optional<SurprisalScores> surprisal;
};

ChunkAnalysis analyze_chunk(const Chunk& chunk, const std::vector<StrategySpec>& strategies,
                            const EncoderResources& res);

// Runs one deletion strategy. Not valid for summarize.
Skeleton encode(const Chunk& chunk, const ChunkAnalysis& analysis, const StrategySpec& strategy,
                double r_keep, uint64_t run_seed, const EncoderResources& res);

// --- skeleton records -------------------------------------------------------

// {"id","strategy","r_keep","seed","orig_len","retention","skeleton","extra"}
nlohmann::json skeleton_to_json(const Skeleton& s);
Skeleton skeleton_from_json(const nlohmann::json& j);
std::vector<Skeleton> read_skeletons(const std::string& path);

// --- compact metadata -------------------------------------------------------
//
// A run stores one header (strategy, r_keep, seed, bucket mode) and nothing
// per chunk: the receiver estimates L as round(|skeleton| / r_keep) and the
// per-chunk seed is derived from the run seed and the chunk id.

// Receiver-side estimate of L: round(|skeleton| / r_keep), at least 1.
std::size_t estimate_original_length(std::size_t skeleton_len, double r_keep);

Bytes encode_run_header(const StrategySpec& strategy, double r_keep, uint64_t seed, BucketMode mode);

struct MetadataAudit {
  std::size_t header_bytes = 0;
  std::size_t per_chunk_bytes = 0;
  std::size_t chunks = 0;
  std::size_t original_bytes = 0;
  double overhead() const;  // metadata bytes / original bytes
};

MetadataAudit audit_metadata(const StrategySpec& strategy, double r_keep, uint64_t seed,
                             BucketMode mode, const std::vector<Chunk>& corpus);

// --- sweep ------------------------------------------------------------------

struct SweepConfig {
  std::vector<StrategySpec> strategies;
  std::vector<double> r_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  uint64_t seed = 0;
  std::string corpus_path;
  std::size_t max_chunk = 512;
  std::string frequency_path;
  std::string calibration_path;
  std::string tertile_calibration_path;
  std::string surprisal_file;
  std::string surprisal_cmd;
  bool surprisal_unigram_fallback = false;
  std::string decoder_endpoint;  // http(s) URL
  std::string mock_decoder;      // mock kind, used when no endpoint is given
  std::string api_key_header = "Authorization";
  std::string template_path;     // overrides the reconstruct template
  std::string similarity = "exact_match";  // exact_match | none | cmd:<command>
  BucketMode bucket_mode = BucketMode::six_class;
  std::size_t max_retries = 2;
  std::string out_dir = "out";
  std::size_t jobs = 1;
  std::size_t max_failures = 1;

  // Canonical JSON of every field that affects outputs (not out_dir or jobs).
  nlohmann::json canonical() const;
  std::string hash() const;  // 16 hex digits
  bool has_decoder() const { return !decoder_endpoint.empty() || !mock_decoder.empty(); }
};

struct LatencyStat {
  std::string strategy;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t iterations = 0;
};

struct RunRecord {
  std::string config_hash;
  std::string code_version;
  nlohmann::json config;
  std::filesystem::path directory;
  std::filesystem::path skeletons;
  std::filesystem::path reconstructions;
  std::filesystem::path metrics;
  std::filesystem::path summary;
  std::vector<LatencyStat> encoder_latency;  // per-cell wall clock of this run
  std::size_t skeleton_records = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
};

nlohmann::json run_record_to_json(const RunRecord& r);

// Loads every prerequisite (ConfigError naming the flag on failure), then
// runs the sweep with cfg.jobs workers. Output files are written in a fixed
// (strategy, r_keep, corpus order) order regardless of scheduling.
RunRecord run_sweep(const SweepConfig& cfg);

// Owns whatever run_sweep loads; exposed for the CLI's single-shot commands.
struct LoadedResources {
  std::optional<FrequencyTable> frequency;
  std::optional<CalibrationTable> calibration;
  std::optional<CalibrationTable> tertile_calibration;
  std::unique_ptr<SurprisalProvider> surprisal;
  std::unique_ptr<ReconstructionClient> decoder;
  std::unique_ptr<SimilarityProvider> similarity;
  EncoderResources view() const;
};

LoadedResources load_resources(const SweepConfig& cfg);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricReport& m);
std::string summary_csv_header();
std::string summary_csv_row(const SummaryRow& row);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

// --- latency ----------------------------------------------------------------

struct LatencyOptions {
  std::size_t warmup = 100;
  std::size_t iterations = 1000;
  double r_keep = 0.5;
  uint64_t seed = 0;
};

// Wall clock per encode (tokenize, classify, surprisal lookup, delete).
std::vector<LatencyStat> measure_encoder_latency(const std::vector<Chunk>& chunks,
                                                 const std::vector<StrategySpec>& strategies,
                                                 const EncoderResources& res,
                                                 const LatencyOptions& options = {});

// --- lossless baseline -------------------------------------------------------

struct LosslessRow {
  std::string chunk_id;
  std::size_t original_bytes = 0;
  std::size_t compressed_bytes = 0;
  double ratio() const;
};

struct CascadeRow {
  std::string strategy;
  double r_keep = 1.0;
  double mean_ratio = 0.0;  // mean over chunks of original bytes / codec(skeleton) bytes
};

struct LosslessReport {
  std::string codec;
  std::vector<LosslessRow> chunks;
  double mean_ratio = 0.0;
  std::vector<CascadeRow> cascade;
};

LosslessReport lossless_baseline(const std::vector<Chunk>& corpus, const LosslessCodec& codec,
                                 const std::vector<Skeleton>& skeletons = {});

// --- report -----------------------------------------------------------------

// One markdown table per metric: strategies as rows (first-appearance order),
// r_keep as columns (descending). The best value of each column is bold
// (the minimum for cer, the maximum otherwise); missing cells render as "—".
std::string render_metric_table(const std::vector<SummaryRow>& rows, const std::string& metric);

// Writes report.md and series_<metric>.tsv into `dir`; returns written paths.
std::vector<std::filesystem::path> emit_report(const std::vector<SummaryRow>& rows,
                                               const std::filesystem::path& dir);

}  // namespace lstc
