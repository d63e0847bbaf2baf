// SPDX-License-Identifier: Apache-2.0
//
// lstc: lossy text compression toolkit command line.

#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "lstc/error.hpp"
#include "lstc/harness.hpp"
#include "lstc/log.hpp"

namespace {

using namespace lstc;

struct Common {
  SweepConfig cfg;
  std::string buckets = "6";
  std::string surprisal_fallback;
  std::string strategies;
  std::string rkeep_grid = "0.1:0.9:0.1";
};

void add_corpus(CLI::App* app, Common& c, bool required = true) {
  auto* opt = app->add_option("--corpus", c.cfg.corpus_path, "JSONL corpus ({\"id\",\"text\",\"lang\"?,\"entities\"?})");
  if (required) opt->required();
  app->add_option("--max-chunk", c.cfg.max_chunk, "Maximum chunk length in units")->capture_default_str();
}

void add_encoder_flags(CLI::App* app, Common& c, bool tertile_ok = false) {
  app->add_option("--freq-table", c.cfg.frequency_path, "word<TAB>zipf table");
  app->add_option("--calib", c.cfg.calibration_path, "Frequency-bucket calibration JSON");
  app->add_option("--tertile-calib", c.cfg.tertile_calibration_path, "Surprisal-tertile calibration JSON");
  if (tertile_ok)
    app->add_option("--buckets", c.buckets, "Bucket scheme: 3, 6 or tertile")
        ->check(CLI::IsMember({"3", "6", "tertile"}))
        ->capture_default_str();
  else
    app->add_option("--buckets", c.buckets, "Frequency bucket scheme")->check(CLI::IsMember({"3", "6"}))->capture_default_str();
  app->add_option("--surprisal-file", c.cfg.surprisal_file, "JSONL surprisal scores");
  app->add_option("--surprisal-cmd", c.cfg.surprisal_cmd, "Helper process serving surprisal scores");
  app->add_option("--surprisal-fallback", c.surprisal_fallback, "Unigram approximation from the frequency table")
      ->check(CLI::IsMember({"unigram"}));
  app->add_option("--seed", c.cfg.seed, "Run seed")->capture_default_str();
}

void add_decoder_flags(CLI::App* app, Common& c) {
  app->add_option("--decoder-endpoint", c.cfg.decoder_endpoint,
                  "HTTP endpoint; API key read from LSTC_DECODER_API_KEY");
  app->add_option("--mock-decoder", c.cfg.mock_decoder, "echo | pad_to_estimate | truncating | repeat_loop")
      ->check(CLI::IsMember({"echo", "pad_to_estimate", "truncating", "repeat_loop"}));
  app->add_option("--api-key-header", c.cfg.api_key_header, "Header carrying the API key")->capture_default_str();
  app->add_option("--template", c.cfg.template_path, "Reconstruction prompt template file");
  app->add_option("--max-retries", c.cfg.max_retries, "Decoder retries after the first attempt")->capture_default_str();
}

void add_similarity_flag(CLI::App* app, Common& c) {
  app->add_option("--similarity", c.cfg.similarity, "exact_match | none | cmd:<command>")->capture_default_str();
}

void finish(Common& c) {
  if (c.buckets != "tertile") c.cfg.bucket_mode = parse_bucket_mode(c.buckets);
  c.cfg.surprisal_unigram_fallback = c.surprisal_fallback == "unigram";
}

std::vector<Chunk> load_corpus(const SweepConfig& cfg) {
  return ingest_corpus(cfg.corpus_path, {cfg.max_chunk});
}

// Writes to `path`, or stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::string today() {
  const std::time_t t = std::time(nullptr);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", std::gmtime(&t));
  return buf;
}

int cmd_compress(Common& c, const std::string& strategy, double r_keep, const std::string& out_path) {
  finish(c);
  const auto spec = parse_strategy(strategy);
  if (spec.kind == StrategyKind::summarize) throw ConfigError("compress: summarize needs the sweep command");
  if (!(r_keep > 0.0 && r_keep <= 1.0)) throw ConfigError("--rkeep must lie in (0, 1]");
  auto loaded = load_resources(c.cfg);
  auto res = loaded.view();
  res.bucket_mode = c.cfg.bucket_mode;
  check_prerequisites({spec}, res);
  const auto corpus = load_corpus(c.cfg);
  Output out(out_path);
  for (const auto& chunk : corpus) {
    const auto analysis = analyze_chunk(chunk, {spec}, res);
    out.stream() << skeleton_to_json(encode(chunk, analysis, spec, r_keep, c.cfg.seed, res)).dump() << '\n';
  }
  return 0;
}

int cmd_reconstruct(Common& c, const std::string& skeleton_path, const std::string& lang,
                    const std::string& out_path) {
  finish(c);
  if (!c.cfg.has_decoder()) throw ConfigError("reconstruct needs --decoder-endpoint or --mock-decoder");
  auto loaded = load_resources(c.cfg);
  const auto skeletons = read_skeletons(skeleton_path);
  Output out(out_path);
  std::size_t failures = 0;
  for (const auto& s : skeletons) {
    ReconstructionRequest req;
    req.chunk_id = s.id;
    req.skeleton = s.text;
    req.original_len_estimate = estimate_original_length(s.text.size(), s.r_keep);
    req.lang = parse_lang(lang);
    req.strategy = s.strategy;
    try {
      const auto r = loaded.decoder->reconstruct(req);
      out.stream() << nlohmann::json{{"id", s.id},
                                     {"strategy", s.strategy},
                                     {"r_keep", s.r_keep},
                                     {"text", units_to_utf8(r.text)},
                                     {"attempts", r.attempts},
                                     {"accepted", r.accepted},
                                     {"latency_ms", r.latency_ms}}
                          .dump()
                   << '\n';
    } catch (const TransportError& e) {
      warn(e.what());
      ++failures;
    }
  }
  return failures < c.cfg.max_failures ? 0 : 1;
}

int cmd_evaluate(Common& c, const std::string& skeleton_path, const std::string& recon_path,
                 const std::string& out_path, const std::string& summary_path) {
  finish(c);
  auto loaded = load_resources(c.cfg);
  const auto corpus = load_corpus(c.cfg);
  std::map<std::string, const Chunk*> by_id;
  for (const auto& ch : corpus) by_id[ch.id] = &ch;

  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, std::pair<std::string, std::size_t>> recon;
  if (!recon_path.empty()) {
    std::ifstream in(recon_path);
    if (!in) throw ConfigError("cannot open '" + recon_path + "'");
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        recon[{j.at("id").get<std::string>(), j.at("strategy").get<std::string>(), j.at("r_keep").get<double>()}] =
            {j.at("text").get<std::string>(), j.value("attempts", std::size_t{0})};
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(recon_path, n, e.what());
      }
    }
  }

  std::vector<MetricReport> reports;
  Output out(out_path);
  out.stream() << metrics_csv_header() << '\n';
  for (const auto& s : read_skeletons(skeleton_path)) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      warn("evaluate: no chunk '" + s.id + "' in the corpus");
      continue;
    }
    const Chunk& chunk = *it->second;
    UnitString hyp = s.text;
    std::size_t attempts = 0;
    if (const auto r = recon.find({s.id, s.strategy, s.r_keep}); r != recon.end()) {
      hyp = utf8_to_units(r->second.first);
      attempts = r->second.second;
    }
    MetricReport m;
    m.chunk_id = s.id;
    m.strategy = s.strategy;
    m.r_keep = s.r_keep;
    m.cer = cer(chunk.text, hyp);
    m.rouge_l_f = rouge_l_text(chunk.text, hyp, chunk.lang).f;
    m.entity_preservation = entity_preservation(chunk, s.text);
    m.realized_retention = realized_retention(chunk, s.text).value();
    m.semantic_sim = similarity(chunk.text, hyp, loaded.similarity.get());
    m.attempts = attempts;
    out.stream() << metrics_csv_row(m) << '\n';
    reports.push_back(std::move(m));
  }
  if (!summary_path.empty()) {
    Output summary(summary_path);
    summary.stream() << summary_csv_header() << '\n';
    for (const auto& row : aggregate(reports)) summary.stream() << summary_csv_row(row) << '\n';
  }
  return 0;
}

int cmd_sweep(Common& c) {
  finish(c);
  c.cfg.strategies = parse_strategy_list(c.strategies);
  c.cfg.r_grid = parse_rkeep_grid(c.rkeep_grid);
  const auto record = run_sweep(c.cfg);
  std::cout << record.directory.string() << '\n';
  std::cerr << record.skeleton_records << " skeleton records, " << record.failures << " failures\n";
  return record.failures < c.cfg.max_failures ? 0 : 1;
}

int cmd_calibrate(Common& c, const std::string& corpus_id, const std::string& out_path) {
  finish(c);
  const std::string scheme_name = c.buckets;
  if (!c.cfg.has_decoder()) throw ConfigError("calibrate needs --decoder-endpoint or --mock-decoder");
  auto loaded = load_resources(c.cfg);
  if (!loaded.similarity) throw ConfigError("calibrate needs a similarity provider (--similarity)");
  const auto corpus = load_corpus(c.cfg);
  CalibrationOptions opts;
  opts.corpus_id = corpus_id.empty() ? c.cfg.corpus_path : corpus_id;
  opts.date = today();
  opts.jobs = c.cfg.jobs;
  const auto scheme = parse_calibration_scheme(scheme_name);
  CalibrationTable table;
  if (scheme == CalibrationScheme::tertile) {
    if (!loaded.surprisal)
      throw ConfigError("tertile calibration needs --surprisal-file, --surprisal-cmd or --surprisal-fallback");
    table = calibrate_tertiles(corpus, *loaded.surprisal, *loaded.decoder, *loaded.similarity, opts);
  } else {
    if (!loaded.frequency) throw ConfigError("calibration needs a frequency table (--freq-table)");
    table = calibrate(corpus, *loaded.frequency,
                      scheme == CalibrationScheme::three_class ? BucketMode::three_class : BucketMode::six_class,
                      *loaded.decoder, *loaded.similarity, opts);
  }
  save_calibration(table, out_path);
  return 0;
}

int cmd_latency(Common& c, const LatencyOptions& opts) {
  finish(c);
  const auto strategies = parse_strategy_list(c.strategies);
  auto loaded = load_resources(c.cfg);
  auto res = loaded.view();
  res.bucket_mode = c.cfg.bucket_mode;
  const auto corpus = load_corpus(c.cfg);
  std::printf("%-18s %12s %12s %8s\n", "strategy", "median_ms", "p95_ms", "n");
  for (const auto& row : measure_encoder_latency(corpus, strategies, res, opts))
    std::printf("%-18s %12.4f %12.4f %8zu\n", row.strategy.c_str(), row.median_ms, row.p95_ms, row.iterations);
  return 0;
}

int cmd_lossless(Common& c, const std::string& codec_name, const std::string& skeleton_path, bool per_chunk) {
  const auto corpus = load_corpus(c.cfg);
  const auto codec = make_codec(codec_name);
  std::vector<Skeleton> skeletons;
  if (!skeleton_path.empty()) skeletons = read_skeletons(skeleton_path);
  const auto report = lossless_baseline(corpus, *codec, skeletons);
  if (per_chunk)
    for (const auto& row : report.chunks)
      std::printf("%s\t%zu\t%zu\t%.4f\n", row.chunk_id.c_str(), row.original_bytes, row.compressed_bytes,
                  row.ratio());
  std::printf("codec\t%s\nchunks\t%zu\nmean_ratio\t%.4f\n", report.codec.c_str(), report.chunks.size(),
              report.mean_ratio);
  for (const auto& row : report.cascade)
    std::printf("cascade\t%s\t%g\t%.4f\n", row.strategy.c_str(), row.r_keep, row.mean_ratio);
  return 0;
}

int cmd_report(const std::string& summary_path, const std::string& out_dir) {
  const auto rows = read_summary_csv(summary_path);
  for (const auto& p : emit_report(rows, out_dir)) std::cout << p.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lossy text compression by deletion: encoders, reconstruction and evaluation"};
  app.require_subcommand(1);
  Common c;

  std::string strategy;
  double r_keep = 0.5;
  std::string out_path;
  auto* compress = app.add_subcommand("compress", "Encode a corpus with one strategy into skeleton JSONL");
  add_corpus(compress, c);
  add_encoder_flags(compress, c);
  compress->add_option("--strategy", strategy, "Strategy id")->required();
  compress->add_option("--rkeep", r_keep, "Retention rate")->required();
  compress->add_option("--out", out_path, "Output file (default stdout)");

  std::string skeleton_path;
  std::string lang = "english";
  auto* reconstruct = app.add_subcommand("reconstruct", "Reconstruct skeleton JSONL through a decoder");
  reconstruct->add_option("--skeletons", skeleton_path, "Skeleton JSONL")->required();
  reconstruct->add_option("--lang", lang, "english | presegmented")->capture_default_str();
  reconstruct->add_option("--max-failures", c.cfg.max_failures, "Exit non-zero at this many failures")
      ->capture_default_str();
  add_decoder_flags(reconstruct, c);
  reconstruct->add_option("--out", out_path, "Output file (default stdout)");

  std::string recon_path;
  std::string summary_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score skeletons (and reconstructions) against a corpus");
  add_corpus(evaluate, c);
  evaluate->add_option("--skeletons", skeleton_path, "Skeleton JSONL")->required();
  evaluate->add_option("--reconstructions", recon_path, "Reconstruction JSONL");
  add_similarity_flag(evaluate, c);
  evaluate->add_option("--out", out_path, "Per-chunk metrics CSV (default stdout)");
  evaluate->add_option("--summary", summary_path, "Aggregated CSV");

  auto* sweep = app.add_subcommand("sweep", "Run strategies x retention grid");
  add_corpus(sweep, c);
  add_encoder_flags(sweep, c);
  add_decoder_flags(sweep, c);
  add_similarity_flag(sweep, c);
  sweep->add_option("--strategies", c.strategies, "Comma separated strategy ids")->required();
  sweep->add_option("--rkeep-grid", c.rkeep_grid, "lo:hi:step or a comma separated list")->capture_default_str();
  sweep->add_option("--out", c.cfg.out_dir, "Output root; runs go to <out>/<config hash>")->capture_default_str();
  sweep->add_option("--jobs", c.cfg.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--max-failures", c.cfg.max_failures, "Exit non-zero at this many failed cells")
      ->capture_default_str();

  std::string corpus_id;
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Measure per-bucket full-deletion scores");
  add_corpus(calibrate_cmd, c);
  add_encoder_flags(calibrate_cmd, c, true);
  add_decoder_flags(calibrate_cmd, c);
  add_similarity_flag(calibrate_cmd, c);
  calibrate_cmd->add_option("--corpus-id", corpus_id, "Provenance label");
  calibrate_cmd->add_option("--jobs", c.cfg.jobs, "Chunks reconstructed concurrently")->capture_default_str();
  calibrate_cmd->add_option("--out", out_path, "Calibration JSON")->required();

  LatencyOptions latency_opts;
  auto* latency = app.add_subcommand("latency", "Encoder wall-clock latency per chunk");
  add_corpus(latency, c);
  add_encoder_flags(latency, c);
  latency->add_option("--strategies", c.strategies, "Comma separated strategy ids")->required();
  latency->add_option("--warmup", latency_opts.warmup, "Untimed iterations")->capture_default_str();
  latency->add_option("--iterations", latency_opts.iterations, "Timed iterations")->capture_default_str();
  latency->add_option("--rkeep", latency_opts.r_keep, "Retention rate")->capture_default_str();

  std::string codec = "zlib";
  bool per_chunk = false;
  auto* lossless = app.add_subcommand("lossless", "Lossless codec baseline and cascaded ratios");
  add_corpus(lossless, c);
  lossless->add_option("--codec", codec, "zlib | lzma")->capture_default_str();
  lossless->add_option("--skeletons", skeleton_path, "Skeleton JSONL for cascaded ratios");
  lossless->add_flag("--per-chunk", per_chunk, "Print one row per chunk");

  std::string report_dir = "report";
  auto* report = app.add_subcommand("report", "Markdown tables and plot series from a summary CSV");
  report->add_option("--summary", summary_path, "summary.csv from a sweep")->required();
  report->add_option("--out", report_dir, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compress) return cmd_compress(c, strategy, r_keep, out_path);
    if (*reconstruct) return cmd_reconstruct(c, skeleton_path, lang, out_path);
    if (*evaluate) return cmd_evaluate(c, skeleton_path, recon_path, out_path, summary_path);
    if (*sweep) return cmd_sweep(c);
    if (*calibrate_cmd) return cmd_calibrate(c, corpus_id, out_path);
    if (*latency) {
      latency_opts.seed = c.cfg.seed;
      return cmd_latency(c, latency_opts);
    }
    if (*lossless) return cmd_lossless(c, codec, skeleton_path, per_chunk);
    if (*report) return cmd_report(summary_path, report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
