// SPDX-License-Identifier: Apache-2.0

#include "lstc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "lstc/error.hpp"
#include "lstc/log.hpp"
#include "lstc/rng.hpp"

namespace lstc {

namespace fs = std::filesystem;

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Fixed formatting for CSV cells and tables.
std::string fmt(double v, int digits = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = s.find(sep, begin);
    out.push_back(s.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  // nearest rank
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct KindName {
  StrategyKind kind;
  std::string_view name;
};

constexpr KindName kKinds[] = {
    {StrategyKind::step, "step"},
    {StrategyKind::gaussian, "gaussian"},
    {StrategyKind::bernoulli, "bernoulli"},
    {StrategyKind::poisson, "poisson"},
    {StrategyKind::wordlen, "wordlen"},
    {StrategyKind::wordfreq, "wordfreq"},
    {StrategyKind::opt, "opt"},
    {StrategyKind::entropy, "entropy"},
    {StrategyKind::entropy_lp, "entropy_lp"},
    {StrategyKind::entropy_freqbkt, "entropy_freqbkt"},
    {StrategyKind::hybrid, "hybrid"},
    {StrategyKind::summarize, "summarize"},
};

}  // namespace

// --- strategy specs ---------------------------------------------------------

std::string StrategySpec::id() const {
  if (kind == StrategyKind::hybrid) return "hybrid@" + shortest(alpha);
  for (const auto& k : kKinds)
    if (k.kind == kind) return std::string(k.name);
  return "unknown";
}

bool StrategySpec::needs_frequency_table() const {
  return kind == StrategyKind::wordfreq || kind == StrategyKind::opt ||
         kind == StrategyKind::entropy_freqbkt || kind == StrategyKind::hybrid;
}

bool StrategySpec::needs_calibration() const {
  return kind == StrategyKind::opt || kind == StrategyKind::entropy_freqbkt;
}

bool StrategySpec::needs_tertile_calibration() const { return kind == StrategyKind::entropy_lp; }

bool StrategySpec::needs_surprisal() const {
  return kind == StrategyKind::entropy || kind == StrategyKind::entropy_lp ||
         kind == StrategyKind::entropy_freqbkt || kind == StrategyKind::hybrid;
}

bool StrategySpec::needs_decoder() const { return kind == StrategyKind::summarize; }

bool StrategySpec::exact_rate() const {
  return kind != StrategyKind::wordlen && kind != StrategyKind::summarize;
}

StrategySpec parse_strategy(std::string_view id) {
  id = trim(id);
  if (id.starts_with("hybrid")) {
    StrategySpec s{StrategyKind::hybrid, 0.5};
    if (id == "hybrid") return s;
    if (id[6] != '@') throw ConfigError("unknown strategy '" + std::string(id) + "'");
    const auto alpha = to_double(id.substr(7));
    if (!alpha || !(*alpha >= 0.0 && *alpha <= 1.0))
      throw ConfigError("hybrid alpha must be a number in [0, 1]: '" + std::string(id) + "'");
    s.alpha = *alpha;
    return s;
  }
  for (const auto& k : kKinds)
    if (k.name == id) return {k.kind, 0.5};
  throw ConfigError("unknown strategy '" + std::string(id) + "'");
}

std::vector<StrategySpec> parse_strategy_list(std::string_view list) {
  std::vector<StrategySpec> out;
  for (auto part : split(list, ',')) {
    part = trim(part);
    if (!part.empty()) out.push_back(parse_strategy(part));
  }
  if (out.empty()) throw ConfigError("strategy list is empty");
  return out;
}

std::vector<double> parse_rkeep_grid(std::string_view grid) {
  std::vector<double> out;
  const auto snap = [](double v) { return std::round(v * 1e9) / 1e9; };
  const auto parts = split(grid, ':');
  if (parts.size() == 3) {
    const auto lo = to_double(trim(parts[0]));
    const auto hi = to_double(trim(parts[1]));
    const auto step = to_double(trim(parts[2]));
    if (!lo || !hi || !step || *step <= 0.0 || *hi < *lo)
      throw ConfigError("bad --rkeep-grid '" + std::string(grid) + "', expected lo:hi:step");
    const auto n = static_cast<std::size_t>(std::floor((*hi - *lo) / *step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(snap(*lo + static_cast<double>(i) * *step));
  } else if (parts.size() == 1) {
    for (auto p : split(grid, ',')) {
      p = trim(p);
      if (p.empty()) continue;
      const auto v = to_double(p);
      if (!v) throw ConfigError("bad --rkeep-grid value '" + std::string(p) + "'");
      out.push_back(*v);
    }
  } else {
    throw ConfigError("bad --rkeep-grid '" + std::string(grid) + "'");
  }
  if (out.empty()) throw ConfigError("--rkeep-grid is empty");
  for (double r : out)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("--rkeep-grid value " + shortest(r) + " not in (0, 1]");
  return out;
}

void check_prerequisites(const std::vector<StrategySpec>& strategies, const EncoderResources& res) {
  if (strategies.empty()) throw ConfigError("no strategies given (--strategies)");
  for (const auto& s : strategies) {
    const std::string id = s.id();
    if (s.needs_frequency_table() && !res.frequency)
      throw ConfigError(id + " needs a frequency table (--freq-table)");
    if (s.needs_calibration()) {
      if (!res.calibration) throw ConfigError(id + " needs a calibration table (--calib)");
      const auto want = res.bucket_mode == BucketMode::three_class ? CalibrationScheme::three_class
                                                                   : CalibrationScheme::six_class;
      if (res.calibration->scheme != want)
        throw ConfigError("--calib has scheme " +
                          std::string(calibration_scheme_name(res.calibration->scheme)) +
                          " but --buckets is " + std::string(bucket_mode_name(res.bucket_mode)));
    }
    if (s.needs_tertile_calibration()) {
      if (!res.tertile_calibration)
        throw ConfigError(id + " needs a tertile calibration table (--tertile-calib)");
      if (res.tertile_calibration->scheme != CalibrationScheme::tertile)
        throw ConfigError("--tertile-calib does not hold a tertile calibration");
    }
    if (s.needs_surprisal() && !res.surprisal)
      throw ConfigError(id +
                        " needs surprisal scores (--surprisal-file, --surprisal-cmd or "
                        "--surprisal-fallback unigram)");
    if (s.needs_decoder() && !res.decoder)
      throw ConfigError(id + " needs a decoder (--decoder-endpoint or --mock-decoder)");
  }
}

ChunkAnalysis analyze_chunk(const Chunk& chunk, const std::vector<StrategySpec>& strategies,
                            const EncoderResources& res) {
  ChunkAnalysis a;
  a.spans = tokenize(chunk);
  bool three = false;
  bool scheme = false;
  bool surprisal = false;
  for (const auto& s : strategies) {
    three |= s.kind == StrategyKind::wordfreq;
    scheme |= s.needs_calibration();
    surprisal |= s.needs_surprisal();
  }
  if (three) a.three_class = classify(chunk, a.spans, *res.frequency, BucketScheme{BucketMode::three_class});
  if (scheme) {
    if (res.bucket_mode == BucketMode::three_class && a.three_class)
      a.scheme_profile = a.three_class;
    else
      a.scheme_profile = classify(chunk, a.spans, *res.frequency, BucketScheme{res.bucket_mode});
  }
  if (surprisal) {
    a.surprisal = res.surprisal->scores(chunk, a.spans);
    check_alignment(*a.surprisal, a.spans);
  }
  return a;
}

Skeleton encode(const Chunk& chunk, const ChunkAnalysis& a, const StrategySpec& strategy,
                double r_keep, uint64_t run_seed, const EncoderResources& res) {
  const std::string id = strategy.id();
  const RetentionBudget budget(r_keep);
  const uint64_t seed = derive_seed(run_seed, chunk.id, id);
  Skeleton s;
  switch (strategy.kind) {
    case StrategyKind::step:
      s = make_skeleton(chunk, budget, step_delete(chunk, budget));
      break;
    case StrategyKind::gaussian:
      s = make_skeleton(chunk, budget,
                        stochastic_delete(chunk, budget, StochasticDist::gaussian, seed, res.stochastic));
      break;
    case StrategyKind::bernoulli:
      s = make_skeleton(chunk, budget,
                        stochastic_delete(chunk, budget, StochasticDist::bernoulli, seed, res.stochastic));
      break;
    case StrategyKind::poisson:
      s = make_skeleton(chunk, budget,
                        stochastic_delete(chunk, budget, StochasticDist::poisson, seed, res.stochastic));
      break;
    case StrategyKind::wordlen: {
      const RetentionBudget tolerant(r_keep, res.wordlen.epsilon);
      const auto traced = wordlen_delete_traced(chunk, tolerant, seed, res.wordlen);
      s = make_skeleton(chunk, tolerant, traced.mask, {{"stage", traced.last_stage}});
      break;
    }
    case StrategyKind::wordfreq:
      s = make_skeleton(chunk, budget, wordfreq_delete(chunk, budget, a.spans, *a.three_class, seed));
      break;
    case StrategyKind::opt:
      s = opt_delete(chunk, budget, a.spans, *a.scheme_profile, *res.calibration, seed);
      break;
    case StrategyKind::entropy:
      s = make_skeleton(chunk, budget, entropy_delete(chunk, budget, a.spans, *a.surprisal, seed));
      break;
    case StrategyKind::entropy_lp:
      s = entropy_lp_delete(chunk, budget, a.spans, *a.surprisal, *res.tertile_calibration, seed);
      break;
    case StrategyKind::entropy_freqbkt:
      s = entropy_in_freqbuckets_delete(chunk, budget, a.spans, *a.surprisal, *a.scheme_profile,
                                        *res.calibration, seed);
      break;
    case StrategyKind::hybrid:
      s = hybrid_delete(chunk, budget, a.spans, *a.surprisal, *res.frequency,
                        HybridConfig(strategy.alpha), seed);
      break;
    case StrategyKind::summarize:
      throw ConfigError("summarize produces no skeleton");
  }
  s.strategy = id;
  return s;
}

// --- skeleton records -------------------------------------------------------

nlohmann::json skeleton_to_json(const Skeleton& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["strategy"] = s.strategy;
  j["r_keep"] = s.r_keep;
  j["seed"] = s.seed ? nlohmann::json(*s.seed) : nlohmann::json(nullptr);
  j["orig_len"] = s.original_len;
  j["retention"] = s.original_len == 0 ? 0.0
                                       : static_cast<double>(s.text.size()) /
                                             static_cast<double>(s.original_len);
  j["skeleton"] = units_to_utf8(s.text);
  j["extra"] = s.extra;
  return j;
}

Skeleton skeleton_from_json(const nlohmann::json& j) {
  Skeleton s;
  try {
    s.id = j.at("id").get<std::string>();
    s.strategy = j.at("strategy").get<std::string>();
    s.r_keep = j.at("r_keep").get<double>();
    if (j.contains("seed") && !j.at("seed").is_null()) s.seed = j.at("seed").get<uint64_t>();
    s.original_len = j.at("orig_len").get<std::size_t>();
    s.text = utf8_to_units(j.at("skeleton").get<std::string>());
    if (j.contains("extra")) s.extra = j.at("extra");
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad skeleton record: " + std::string(e.what()));
  }
  return s;
}

std::vector<Skeleton> read_skeletons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open skeleton file '" + path + "'");
  std::vector<Skeleton> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(skeleton_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, n, e.what());
    } catch (const Error& e) {
      throw ParseError(path, n, e.what());
    }
  }
  return out;
}

// --- compact metadata -------------------------------------------------------

std::size_t estimate_original_length(std::size_t skeleton_len, double r_keep) {
  if (!(r_keep > 0.0)) throw Error("r_keep must be positive");
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(skeleton_len) / r_keep + 0.5)));
}

Bytes encode_run_header(const StrategySpec& strategy, double r_keep, uint64_t seed, BucketMode mode) {
  Bytes out;
  out.push_back(static_cast<uint8_t>(strategy.kind));
  const auto permille = [](double v) { return static_cast<uint16_t>(std::lround(v * 1000.0)); };
  auto put16 = [&](uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v & 0xff));
  };
  put16(permille(r_keep));
  if (strategy.kind == StrategyKind::hybrid) put16(permille(strategy.alpha));
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(seed >> shift));
  out.push_back(mode == BucketMode::three_class ? 3 : 6);
  return out;
}

double MetadataAudit::overhead() const {
  if (original_bytes == 0) return 0.0;
  return static_cast<double>(header_bytes + per_chunk_bytes * chunks) /
         static_cast<double>(original_bytes);
}

MetadataAudit audit_metadata(const StrategySpec& strategy, double r_keep, uint64_t seed,
                             BucketMode mode, const std::vector<Chunk>& corpus) {
  MetadataAudit a;
  a.header_bytes = encode_run_header(strategy, r_keep, seed, mode).size();
  a.per_chunk_bytes = 0;
  a.chunks = corpus.size();
  for (const auto& c : corpus) a.original_bytes += c.text_utf8().size();
  return a;
}

// --- sweep ------------------------------------------------------------------

nlohmann::json SweepConfig::canonical() const {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& s : strategies) ids.push_back(s.id());
  // nlohmann::json objects keep keys sorted, so the dump is order independent
  return {
      {"strategies", ids},
      {"r_grid", r_grid},
      {"seed", seed},
      {"corpus", corpus_path},
      {"max_chunk", max_chunk},
      {"freq_table", frequency_path},
      {"calib", calibration_path},
      {"tertile_calib", tertile_calibration_path},
      {"surprisal_file", surprisal_file},
      {"surprisal_cmd", surprisal_cmd},
      {"surprisal_fallback", surprisal_unigram_fallback ? "unigram" : ""},
      {"decoder_endpoint", decoder_endpoint},
      {"mock_decoder", mock_decoder},
      {"template", template_path},
      {"similarity", similarity},
      {"buckets", std::string(bucket_mode_name(bucket_mode))},
      {"max_retries", max_retries},
      {"code_version", std::string(kCodeVersion)},
  };
}

std::string SweepConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical().dump())));
  return buf;
}

EncoderResources LoadedResources::view() const {
  EncoderResources r;
  r.frequency = frequency ? &*frequency : nullptr;
  r.calibration = calibration ? &*calibration : nullptr;
  r.tertile_calibration = tertile_calibration ? &*tertile_calibration : nullptr;
  r.surprisal = surprisal.get();
  r.decoder = decoder.get();
  return r;
}

namespace {

template <typename F>
auto for_flag(const std::string& flag, F&& load) {
  try {
    return load();
  } catch (const ConfigError& e) {
    if (std::string_view(e.what()).find(flag) != std::string_view::npos) throw;
    throw ConfigError(flag + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(flag + ": " + e.what());
  }
}

}  // namespace

LoadedResources load_resources(const SweepConfig& cfg) {
  LoadedResources r;
  if (!cfg.frequency_path.empty())
    r.frequency = for_flag("--freq-table", [&] { return load_frequency_table(cfg.frequency_path); });
  if (!cfg.calibration_path.empty())
    r.calibration = for_flag("--calib", [&] { return load_calibration(cfg.calibration_path); });
  if (!cfg.tertile_calibration_path.empty())
    r.tertile_calibration =
        for_flag("--tertile-calib", [&] { return load_calibration(cfg.tertile_calibration_path); });

  if (!cfg.surprisal_file.empty()) {
    r.surprisal = for_flag("--surprisal-file", [&]() -> std::unique_ptr<SurprisalProvider> {
      return std::make_unique<FileSurprisalProvider>(cfg.surprisal_file);
    });
  } else if (!cfg.surprisal_cmd.empty()) {
    r.surprisal = for_flag("--surprisal-cmd", [&]() -> std::unique_ptr<SurprisalProvider> {
      return std::make_unique<ProcessSurprisalProvider>(cfg.surprisal_cmd);
    });
  } else if (cfg.surprisal_unigram_fallback) {
    if (!r.frequency) throw ConfigError("--surprisal-fallback unigram needs --freq-table");
    r.surprisal = std::make_unique<UnigramSurprisalProvider>(*r.frequency);
  }

  if (cfg.has_decoder()) {
    std::shared_ptr<DecoderEndpoint> endpoint;
    RetryPolicy policy;
    policy.max_retries = cfg.max_retries;
    if (!cfg.decoder_endpoint.empty()) {
      HttpEndpointConfig http;
      http.url = cfg.decoder_endpoint;
      http.api_key_header = cfg.api_key_header;
      if (const char* key = std::getenv("LSTC_DECODER_API_KEY")) http.api_key = key;
      endpoint = for_flag("--decoder-endpoint", [&] { return make_http_endpoint(http); });
    } else {
      endpoint = for_flag("--mock-decoder", [&] { return mock_decoder(parse_mock_kind(cfg.mock_decoder)); });
      policy.initial_backoff = std::chrono::milliseconds(0);
    }
    r.decoder = std::make_unique<ReconstructionClient>(
        endpoint, policy, static_cast<std::ptrdiff_t>(std::max<std::size_t>(cfg.jobs, 4)));
    if (!cfg.template_path.empty()) {
      const auto tmpl = for_flag("--template", [&] { return PromptTemplate::load(cfg.template_path); });
      r.decoder->set_template(default_template_id(false, Lang::english), tmpl);
      r.decoder->set_template(default_template_id(false, Lang::presegmented), tmpl);
    }
  }

  if (cfg.similarity == "exact_match") {
    r.similarity = std::make_unique<ExactMatchSimilarity>();
  } else if (cfg.similarity.starts_with("cmd:")) {
    r.similarity = for_flag("--similarity", [&]() -> std::unique_ptr<SimilarityProvider> {
      return std::make_unique<ExternalProcessSimilarity>(cfg.similarity.substr(4));
    });
  } else if (cfg.similarity != "none") {
    throw ConfigError("--similarity must be exact_match, none or cmd:<command>");
  }
  return r;
}

std::string metrics_csv_header() {
  return "strategy,r_keep,chunk_id,cer,rouge_l_f,entity_pres,retention,sim,attempts";
}

std::string metrics_csv_row(const MetricReport& m) {
  std::string row = csv_field(m.strategy) + "," + fmt(m.r_keep) + "," + csv_field(m.chunk_id) + "," +
                    fmt(m.cer) + "," + fmt(m.rouge_l_f) + ",";
  if (m.entity_preservation) row += fmt(*m.entity_preservation);
  row += "," + fmt(m.realized_retention) + ",";
  if (m.semantic_sim) row += fmt(*m.semantic_sim);
  row += "," + std::to_string(m.attempts);
  return row;
}

std::string summary_csv_header() { return "strategy,r_keep,metric,mean,sd,n,ci_low,ci_high"; }

std::string summary_csv_row(const SummaryRow& r) {
  return csv_field(r.strategy) + "," + fmt(r.r_keep) + "," + r.metric + "," + fmt(r.stat.mean) + "," +
         fmt(r.stat.sd) + "," + std::to_string(r.stat.n) + "," + fmt(r.stat.ci.low) + "," +
         fmt(r.stat.ci.high);
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open summary CSV '" + path + "'");
  std::vector<SummaryRow> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    if (n == 1 && line.starts_with("strategy,")) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 8) throw ParseError(path, n, "expected 8 columns");
    SummaryRow r;
    r.strategy = std::string(f[0]);
    r.metric = std::string(f[2]);
    const auto rk = to_double(f[1]);
    const auto mean = to_double(f[3]);
    const auto sd = to_double(f[4]);
    const auto lo = to_double(f[6]);
    const auto hi = to_double(f[7]);
    if (!rk || !mean || !sd || !lo || !hi) throw ParseError(path, n, "non-numeric field");
    r.r_keep = *rk;
    r.stat.mean = *mean;
    r.stat.sd = *sd;
    r.stat.n = static_cast<std::size_t>(std::strtoull(std::string(f[5]).c_str(), nullptr, 10));
    r.stat.ci = {*lo, *hi};
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json run_record_to_json(const RunRecord& r) {
  nlohmann::json latency = nlohmann::json::array();
  for (const auto& l : r.encoder_latency)
    latency.push_back({{"strategy", l.strategy},
                       {"median_ms", l.median_ms},
                       {"p95_ms", l.p95_ms},
                       {"n", l.iterations}});
  return {{"config_hash", r.config_hash},
          {"code_version", r.code_version},
          {"config", r.config},
          {"files",
           {{"skeletons", r.skeletons.filename().string()},
            {"reconstructions", r.reconstructions.filename().string()},
            {"metrics", r.metrics.filename().string()},
            {"summary", r.summary.filename().string()}}},
          {"skeleton_records", r.skeleton_records},
          {"encoder_latency", latency},
          {"failures", r.failures},
          {"failure_messages", r.failure_messages}};
}

namespace {

struct CellResult {
  std::optional<Skeleton> skeleton;
  std::optional<ReconstructionResult> reconstruction;
  std::optional<MetricReport> report;
  std::optional<std::string> failure;
  double encode_ms = 0.0;
};

MetricReport score_cell(const Chunk& chunk, const std::string& strategy, double r_keep,
                        UnitView skeleton, UnitView hypothesis, std::size_t attempts,
                        SimilarityProvider* sim) {
  MetricReport m;
  m.chunk_id = chunk.id;
  m.strategy = strategy;
  m.r_keep = r_keep;
  m.cer = cer(chunk.text, hypothesis);
  m.rouge_l_f = rouge_l_text(chunk.text, hypothesis, chunk.lang).f;
  m.entity_preservation = entity_preservation(chunk, skeleton);
  m.realized_retention = realized_retention(chunk, skeleton).value();
  m.semantic_sim = similarity(chunk.text, hypothesis, sim);
  m.attempts = attempts;
  return m;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

RunRecord run_sweep(const SweepConfig& cfg) {
  if (cfg.strategies.empty()) throw ConfigError("no strategies given (--strategies)");
  if (cfg.r_grid.empty()) throw ConfigError("--rkeep-grid is empty");
  for (double r : cfg.r_grid)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("--rkeep-grid value " + shortest(r) + " not in (0, 1]");
  if (cfg.corpus_path.empty()) throw ConfigError("no corpus given (--corpus)");

  LoadedResources loaded = load_resources(cfg);
  EncoderResources res = loaded.view();
  res.bucket_mode = cfg.bucket_mode;
  check_prerequisites(cfg.strategies, res);

  const auto corpus = for_flag("--corpus", [&] { return ingest_corpus(cfg.corpus_path, {cfg.max_chunk}); });

  RunRecord record;
  record.config = cfg.canonical();
  record.config_hash = cfg.hash();
  record.code_version = std::string(kCodeVersion);
  record.directory = fs::path(cfg.out_dir) / record.config_hash;
  fs::create_directories(record.directory);
  record.skeletons = record.directory / "skeletons.jsonl";
  record.reconstructions = record.directory / "reconstructions.jsonl";
  record.metrics = record.directory / "metrics.csv";
  record.summary = record.directory / "summary.csv";

  const std::size_t S = cfg.strategies.size();
  const std::size_t R = cfg.r_grid.size();
  std::vector<CellResult> cells(corpus.size() * S * R);
  const auto cell = [&](std::size_t c, std::size_t s, std::size_t r) -> CellResult& {
    return cells[(c * S + s) * R + r];
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t ci = next++; ci < corpus.size(); ci = next++) {
      const Chunk& chunk = corpus[ci];
      ChunkAnalysis analysis;
      try {
        analysis = analyze_chunk(chunk, cfg.strategies, res);
      } catch (const Error& e) {
        for (std::size_t s = 0; s < S; ++s)
          for (std::size_t r = 0; r < R; ++r) cell(ci, s, r).failure = e.what();
        continue;
      }
      for (std::size_t s = 0; s < S; ++s) {
        const auto& strategy = cfg.strategies[s];
        const std::string id = strategy.id();
        for (std::size_t r = 0; r < R; ++r) {
          CellResult& out = cell(ci, s, r);
          const double rk = cfg.r_grid[r];
          try {
            if (strategy.kind == StrategyKind::summarize) {
              auto result = res.decoder->summarize_to_length(chunk, rk);
              out.report = score_cell(chunk, id, rk, result.text, result.text, result.attempts,
                                      loaded.similarity.get());
              out.reconstruction = std::move(result);
              continue;
            }
            const auto t0 = std::chrono::steady_clock::now();
            Skeleton skel = encode(chunk, analysis, strategy, rk, cfg.seed, res);
            out.encode_ms = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
            if (res.decoder) {
              ReconstructionRequest req;
              req.chunk_id = chunk.id;
              req.skeleton = skel.text;
              req.original_len_estimate = estimate_original_length(skel.text.size(), rk);
              req.lang = chunk.lang;
              req.strategy = id;
              out.skeleton = std::move(skel);
              auto result = res.decoder->reconstruct(req);
              out.report = score_cell(chunk, id, rk, out.skeleton->text, result.text,
                                      result.attempts, loaded.similarity.get());
              out.reconstruction = std::move(result);
            } else {
              out.report = score_cell(chunk, id, rk, skel.text, skel.text, 0, loaded.similarity.get());
              out.skeleton = std::move(skel);
            }
          } catch (const Error& e) {
            out.failure = e.what();
            out.report.reset();
          }
        }
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(cfg.jobs, 1, std::max<std::size_t>(corpus.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> skeleton_lines;
  std::vector<std::string> reconstruction_lines;
  std::vector<std::string> metric_lines{metrics_csv_header()};
  std::vector<MetricReport> reports;
  for (std::size_t s = 0; s < S; ++s) {
    std::vector<double> encode_ms;
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < corpus.size(); ++c) {
        const CellResult& out = cell(c, s, r);
        if (out.skeleton) {
          skeleton_lines.push_back(skeleton_to_json(*out.skeleton).dump());
          encode_ms.push_back(out.encode_ms);
        }
        if (out.reconstruction) {
          const auto& rec = *out.reconstruction;
          reconstruction_lines.push_back(nlohmann::json{{"id", corpus[c].id},
                                                        {"strategy", cfg.strategies[s].id()},
                                                        {"r_keep", cfg.r_grid[r]},
                                                        {"text", units_to_utf8(rec.text)},
                                                        {"attempts", rec.attempts},
                                                        {"accepted", rec.accepted},
                                                        {"latency_ms", rec.latency_ms}}
                                             .dump());
        }
        if (out.report) {
          metric_lines.push_back(metrics_csv_row(*out.report));
          reports.push_back(*out.report);
        }
        if (out.failure) {
          ++record.failures;
          const std::string msg = corpus[c].id + " / " + cfg.strategies[s].id() + " @ " +
                                  shortest(cfg.r_grid[r]) + ": " + *out.failure;
          warn("excluded " + msg);
          record.failure_messages.push_back(msg);
        }
      }
    }
    if (!encode_ms.empty())
      record.encoder_latency.push_back(
          {cfg.strategies[s].id(), median(encode_ms), percentile(encode_ms, 0.95), encode_ms.size()});
  }
  record.skeleton_records = skeleton_lines.size();

  std::vector<std::string> summary_lines{summary_csv_header()};
  for (const auto& row : aggregate(reports)) summary_lines.push_back(summary_csv_row(row));

  write_lines(record.skeletons, skeleton_lines);
  write_lines(record.reconstructions, reconstruction_lines);
  write_lines(record.metrics, metric_lines);
  write_lines(record.summary, summary_lines);
  write_lines(record.directory / "run.json", {run_record_to_json(record).dump(2)});
  return record;
}

// --- latency ----------------------------------------------------------------

std::vector<LatencyStat> measure_encoder_latency(const std::vector<Chunk>& chunks,
                                                 const std::vector<StrategySpec>& strategies,
                                                 const EncoderResources& res,
                                                 const LatencyOptions& options) {
  if (strategies.empty()) throw ConfigError("latency: strategy list is empty");
  if (chunks.empty()) throw ConfigError("latency: no chunks");
  check_prerequisites(strategies, res);
  std::vector<LatencyStat> out;
  for (const auto& strategy : strategies) {
    if (strategy.kind == StrategyKind::summarize) {
      warn("latency: summarize has no local encoder, skipped");
      continue;
    }
    const std::vector<StrategySpec> one{strategy};
    std::size_t sink = 0;
    auto run_once = [&](std::size_t i) {
      const Chunk& c = chunks[i % chunks.size()];
      const auto analysis = analyze_chunk(c, one, res);
      sink += encode(c, analysis, strategy, options.r_keep, options.seed, res).text.size();
    };
    for (std::size_t i = 0; i < options.warmup; ++i) run_once(i);
    std::vector<double> ms;
    ms.reserve(options.iterations);
    for (std::size_t i = 0; i < options.iterations; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      run_once(i);
      ms.push_back(
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    if (sink == 0 && options.iterations > 0) warn("latency: every skeleton was empty");
    out.push_back({strategy.id(), median(ms), percentile(ms, 0.95), ms.size()});
  }
  return out;
}

// --- lossless baseline -------------------------------------------------------

double LosslessRow::ratio() const {
  return compressed_bytes == 0 ? 0.0
                               : static_cast<double>(original_bytes) / static_cast<double>(compressed_bytes);
}

LosslessReport lossless_baseline(const std::vector<Chunk>& corpus, const LosslessCodec& codec,
                                 const std::vector<Skeleton>& skeletons) {
  LosslessReport report;
  report.codec = codec.name();
  std::map<std::string, std::size_t> original_bytes;
  double sum = 0.0;
  for (const auto& c : corpus) {
    const std::string text = c.text_utf8();
    LosslessRow row{c.id, text.size(), checked_compressed_size(codec, text)};
    sum += row.ratio();
    original_bytes[c.id] = text.size();
    report.chunks.push_back(std::move(row));
  }
  if (!report.chunks.empty()) report.mean_ratio = sum / static_cast<double>(report.chunks.size());

  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, std::vector<double>> ratios;
  for (const auto& s : skeletons) {
    const auto it = original_bytes.find(s.id);
    if (it == original_bytes.end()) {
      warn("lossless: skeleton '" + s.id + "' has no chunk in the corpus");
      continue;
    }
    const std::pair<std::string, double> key{s.strategy, s.r_keep};
    if (!ratios.count(key)) order.push_back(key);
    const std::size_t packed = checked_compressed_size(codec, units_to_utf8(s.text));
    ratios[key].push_back(static_cast<double>(it->second) / static_cast<double>(packed));
  }
  for (const auto& key : order) {
    const auto& v = ratios[key];
    double total = 0.0;
    for (double x : v) total += x;
    report.cascade.push_back({key.first, key.second, total / static_cast<double>(v.size())});
  }
  return report;
}

// --- report -----------------------------------------------------------------

namespace {

std::vector<std::string> strategy_order(const std::vector<SummaryRow>& rows) {
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
  return order;
}

}  // namespace

std::string render_metric_table(const std::vector<SummaryRow>& rows, const std::string& metric) {
  const auto strategies = strategy_order(rows);
  std::set<double, std::greater<>> rset;
  std::map<std::pair<std::string, double>, double> value;
  for (const auto& r : rows) {
    rset.insert(r.r_keep);
    if (r.metric == metric) value[{r.strategy, r.r_keep}] = r.stat.mean;
  }
  const std::vector<double> rs(rset.begin(), rset.end());
  const bool lower_is_better = metric == "cer";

  std::map<double, double> best;
  for (const auto& [key, v] : value) {
    auto it = best.find(key.second);
    if (it == best.end() || (lower_is_better ? v < it->second : v > it->second)) best[key.second] = v;
  }

  std::ostringstream out;
  out << "### " << metric << "\n\n| method |";
  for (double r : rs) out << ' ' << fmt(r, 6) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < rs.size(); ++i) out << "---|";
  out << '\n';
  for (const auto& s : strategies) {
    out << "| " << s << " |";
    for (double r : rs) {
      const auto it = value.find({s, r});
      if (it == value.end()) {
        out << " — |";
        continue;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", it->second);
      if (it->second == best[r])
        out << " **" << buf << "** |";
      else
        out << ' ' << buf << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<fs::path> emit_report(const std::vector<SummaryRow>& rows, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> metrics;
  for (const auto& r : rows)
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
  const auto strategies = strategy_order(rows);

  std::vector<fs::path> written;
  std::string md;
  for (const auto& m : metrics) {
    md += render_metric_table(rows, m) + "\n";

    std::vector<const SummaryRow*> series;
    for (const auto& r : rows)
      if (r.metric == m) series.push_back(&r);
    std::stable_sort(series.begin(), series.end(), [&](const SummaryRow* a, const SummaryRow* b) {
      const auto ia = std::find(strategies.begin(), strategies.end(), a->strategy);
      const auto ib = std::find(strategies.begin(), strategies.end(), b->strategy);
      return ia != ib ? ia < ib : a->r_keep < b->r_keep;
    });
    std::vector<std::string> lines{"strategy\tr_keep\tmean\tci_low\tci_high\tn"};
    for (const auto* r : series)
      lines.push_back(r->strategy + "\t" + fmt(r->r_keep) + "\t" + fmt(r->stat.mean) + "\t" +
                      fmt(r->stat.ci.low) + "\t" + fmt(r->stat.ci.high) + "\t" +
                      std::to_string(r->stat.n));
    const fs::path p = dir / ("series_" + m + ".tsv");
    write_lines(p, lines);
    written.push_back(p);
  }
  const fs::path report = dir / "report.md";
  write_lines(report, {md});
  written.insert(written.begin(), report);
  return written;
}

}  // namespace lstc
