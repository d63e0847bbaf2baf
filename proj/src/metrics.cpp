// SPDX-License-Identifier: Apache-2.0

#include "lstc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "lstc/error.hpp"
#include "lstc/log.hpp"
#include "lstc/process.hpp"

namespace lstc {

std::size_t edit_distance(UnitView a, UnitView b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> curr(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

double cer(UnitView reference, UnitView hypothesis) {
  if (reference.empty()) throw Error("cer: reference is empty");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

namespace {

template <typename Seq>
std::size_t lcs_impl(const Seq& a, const Seq& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return lcs_impl(a, b);
}

std::size_t lcs_length(UnitView a, UnitView b) { return lcs_impl(a, b); }

RougeL rouge_l(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  RougeL out;
  const auto lcs = static_cast<double>(lcs_length(reference, hypothesis));
  if (!hypothesis.empty()) out.precision = lcs / static_cast<double>(hypothesis.size());
  if (!reference.empty()) out.recall = lcs / static_cast<double>(reference.size());
  if (out.precision + out.recall > 0.0)
    out.f = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

std::vector<std::string> rouge_tokens(UnitView text, Lang lang) {
  std::vector<std::string> out;
  for (const auto& span : tokenize(text, lang))
    if (span.kind == SpanKind::word || span.kind == SpanKind::digit_run)
      out.push_back(span_key(text, span));
  return out;
}

RougeL rouge_l_text(UnitView reference, UnitView hypothesis, Lang lang) {
  return rouge_l(rouge_tokens(reference, lang), rouge_tokens(hypothesis, lang));
}

std::optional<double> entity_preservation(const Chunk& chunk, UnitView skeleton_text) {
  if (!chunk.entities || chunk.entities->empty()) return std::nullopt;
  std::size_t preserved = 0;
  for (const auto& e : *chunk.entities) {
    const UnitView surface = UnitView(chunk.text).substr(e.start, e.end - e.start);
    if (skeleton_text.find(surface) != UnitView::npos) ++preserved;
  }
  return static_cast<double>(preserved) / static_cast<double>(chunk.entities->size());
}

std::optional<double> ExactMatchSimilarity::score(UnitView reference, UnitView hypothesis) {
  if (reference == hypothesis) return 1.0;
  const auto denom = std::max(reference.size(), hypothesis.size());
  return static_cast<double>(lcs_length(reference, hypothesis)) / static_cast<double>(denom);
}

ExternalProcessSimilarity::ExternalProcessSimilarity(std::string command)
    : process_(std::make_unique<LineProcess>(std::move(command))) {}

ExternalProcessSimilarity::~ExternalProcessSimilarity() = default;

std::string ExternalProcessSimilarity::name() const { return "external:" + process_->command(); }

std::optional<double> ExternalProcessSimilarity::score(UnitView reference, UnitView hypothesis) {
  try {
    nlohmann::json req = {{"ref", units_to_utf8(reference)}, {"hyp", units_to_utf8(hypothesis)}};
    const auto reply = nlohmann::json::parse(process_->request(req.dump()));
    const double s = reply.at("score").get<double>();
    if (!std::isfinite(s)) throw Error("non-finite score");
    return s;
  } catch (const std::exception& e) {
    warn("similarity provider failed: " + std::string(e.what()));
    return std::nullopt;
  }
}

std::optional<double> similarity(UnitView reference, UnitView hypothesis,
                                 SimilarityProvider* provider) {
  if (provider == nullptr) return std::nullopt;
  return provider->score(reference, hypothesis);
}

ConfidenceInterval confidence_interval(double mean, double sd, std::size_t n) {
  if (n == 0) return {mean, mean};
  const double half = 1.96 * sd / std::sqrt(static_cast<double>(n));
  return {mean - half, mean + half};
}

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  s.ci = confidence_interval(s.mean, s.sd, s.n);
  return s;
}

std::vector<SummaryRow> aggregate(const std::vector<MetricReport>& reports) {
  struct Cell {
    std::vector<double> cer, rouge, entity, retention, sim;
  };
  // fold in chunk-id order so the sums do not depend on completion order
  std::vector<const MetricReport*> sorted;
  sorted.reserve(reports.size());
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const MetricReport* a, const MetricReport* b) { return a->chunk_id < b->chunk_id; });
  std::map<std::pair<std::string, double>, Cell> cells;
  for (const MetricReport* rp : sorted) {
    const auto& r = *rp;
    auto& c = cells[{r.strategy, r.r_keep}];
    c.cer.push_back(r.cer);
    c.rouge.push_back(r.rouge_l_f);
    if (r.entity_preservation) c.entity.push_back(*r.entity_preservation);
    c.retention.push_back(r.realized_retention);
    if (r.semantic_sim) c.sim.push_back(*r.semantic_sim);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, c] : cells) {
    const std::pair<const char*, const std::vector<double>*> metrics[] = {
        {"cer", &c.cer},        {"rouge_l_f", &c.rouge}, {"entity_pres", &c.entity},
        {"retention", &c.retention}, {"sim", &c.sim}};
    for (const auto& [name, values] : metrics) {
      if (values->empty()) {
        if (std::string_view(name) != "entity_pres" && std::string_view(name) != "sim")
          warn("aggregate: empty cell " + key.first + " @ " + std::to_string(key.second) + " " + name);
        continue;
      }
      rows.push_back({key.first, key.second, name, summarize(*values)});
    }
  }
  return rows;
}

}  // namespace lstc
