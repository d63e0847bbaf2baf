// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "lstc/error.hpp"
#include "lstc/metrics.hpp"
#include "lstc/strategies.hpp"

using namespace lstc;
using testing::S;
using testing::U;

namespace {

std::vector<std::string> words(std::initializer_list<const char*> w) { return {w.begin(), w.end()}; }

}  // namespace

TEST_CASE("cer examples") {
  CHECK(cer(U("abc"), U("abc")) == 0.0);
  CHECK(cer(U("abc"), U("abd")) == doctest::Approx(1.0 / 3.0));
  CHECK(cer(U("ab"), U("")) == 1.0);
  CHECK(cer(U("ab"), U("abab")) == 1.0);
  CHECK(edit_distance(U("kitten"), U("sitting")) == 3);
  CHECK_THROWS_AS(cer(U(""), U("x")), Error);
}

TEST_CASE("cer sanity bound and zero iff equal") {
  std::mt19937 gen(8);
  for (int i = 0; i < 500; ++i) {
    UnitString a, b;
    const auto la = 1 + gen() % 20, lb = gen() % 20;
    for (std::size_t k = 0; k < la; ++k) a += static_cast<char32_t>(U'a' + gen() % 3);
    for (std::size_t k = 0; k < lb; ++k) b += static_cast<char32_t>(U'a' + gen() % 3);
    const double c = cer(a, b);
    CHECK(c <= static_cast<double>(a.size() + b.size()) / static_cast<double>(a.size()));
    CHECK((c == 0.0) == (a == b));
    CHECK(edit_distance(a, b) == edit_distance(b, a));
  }
}

TEST_CASE("rouge-l examples") {
  const auto r = rouge_l(words({"a", "b", "c"}), words({"a", "c"}));
  CHECK(r.precision == 1.0);
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.f == doctest::Approx(0.8));
  CHECK(rouge_l(words({"x", "y"}), words({"x", "y"})).f == 1.0);
  CHECK(rouge_l(words({"x", "y"}), words({"p", "q"})).f == 0.0);
  CHECK(rouge_l({}, {}).f == 0.0);
}

TEST_CASE("rouge tokens drop punctuation and lowercase") {
  CHECK(rouge_tokens(U("The cat, sat 42!")) == words({"the", "cat", "sat", "42"}));
  CHECK(rouge_l_text(U("The cat sat."), U("the CAT sat")).f == 1.0);
  CHECK(rouge_tokens(U("中国/和/澳大利亚"), Lang::presegmented).size() == 3);
}

TEST_CASE("entity preservation") {
  const auto c = make_chunk("e", "London and the BBC", Lang::english,
                            std::vector<EntityMention>{{"London", 0, 6}, {"BBC", 15, 18}});
  CHECK(entity_preservation(c, U("London ad th")) == 0.5);
  CHECK(entity_preservation(c, c.text) == 1.0);
  CHECK(entity_preservation(c, U("london BBC")) == 0.5);  // case sensitive
  CHECK_FALSE(entity_preservation(make_chunk("n", "no annotations"), U("x")).has_value());

  const auto k = make_chunk("k", "Kathleen Turner", Lang::english,
                            std::vector<EntityMention>{{"Kathleen Turner", 0, 15}});
  const auto wl = wordlen_delete_traced(k, RetentionBudget(0.7), 0);
  CHECK(wl.last_stage == 2);
  const auto skel = apply_mask(k.text, wl.mask);
  CHECK(S(skel).rfind("K", 0) == 0);
  CHECK(entity_preservation(k, skel) == 0.0);
}

TEST_CASE("exact match similarity") {
  ExactMatchSimilarity sim;
  CHECK(sim.score(U("x"), U("x")) == 1.0);
  CHECK(sim.score(U("abcd"), U("abxd")) == 0.75);
  CHECK(sim.score(U("abcd"), U("")) == 0.0);
  CHECK_FALSE(similarity(U("a"), U("a"), nullptr).has_value());
  CHECK(similarity(U("a"), U("a"), &sim) == 1.0);
}

TEST_CASE("external process similarity") {
  ExternalProcessSimilarity sim(testing::bin_path("similarity_helper.py"));
  CHECK(sim.score(U("same"), U("same")) == 1.0);
  CHECK(sim.score(U("same"), U("diff")) == 0.25);

  testing::WarningCapture cap;
  ExternalProcessSimilarity crash(testing::bin_path("similarity_helper.py") + " --crash");
  CHECK_FALSE(crash.score(U("a"), U("b")).has_value());
  CHECK_FALSE(crash.score(U("a"), U("b")).has_value());
  REQUIRE(cap.messages.size() == 2);
  CHECK(cap.messages[0].find("similarity provider failed") != std::string::npos);
}

TEST_CASE("confidence intervals") {
  const auto s = summarize({0.8, 0.6});
  CHECK(s.mean == doctest::Approx(0.7));
  CHECK(s.n == 2);
  CHECK(s.sd == doctest::Approx(std::sqrt(0.02)));
  const auto one = summarize({0.4});
  CHECK(one.sd == 0.0);
  CHECK(one.ci.low == one.ci.high);
  const auto ci = confidence_interval(0.9839, 0.0052, 200);
  CHECK(std::round(ci.low * 1000) / 1000 == doctest::Approx(0.983));
  CHECK(std::round(ci.high * 1000) / 1000 == doctest::Approx(0.985));
}

TEST_CASE("aggregate groups per cell and skips optional metrics") {
  std::vector<MetricReport> reports;
  for (int i = 0; i < 4; ++i) {
    MetricReport m;
    m.chunk_id = "c" + std::to_string(i);
    m.strategy = i < 2 ? "step" : "wordfreq";
    m.r_keep = 0.5;
    m.cer = 0.1 * i;
    m.rouge_l_f = 0.5;
    m.realized_retention = 0.5;
    if (i == 0) m.entity_preservation = 1.0;
    reports.push_back(m);
  }
  const auto rows = aggregate(reports);
  std::size_t step_rows = 0;
  for (const auto& r : rows) {
    CHECK(r.metric != "sim");
    if (r.strategy == "step") ++step_rows;
    if (r.strategy == "wordfreq" && r.metric == "cer") CHECK(r.stat.mean == doctest::Approx(0.25));
    if (r.strategy == "step" && r.metric == "entity_pres") CHECK(r.stat.n == 1);
  }
  CHECK(step_rows == 4);  // cer, rouge, entity, retention
  CHECK(rows.size() == 7);

  // order of reports does not change the sums
  std::vector<MetricReport> reversed(reports.rbegin(), reports.rend());
  const auto rows2 = aggregate(reversed);
  REQUIRE(rows2.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows2[i].stat.mean == rows[i].stat.mean);
}
