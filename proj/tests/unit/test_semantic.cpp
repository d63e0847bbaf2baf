// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "lstc/error.hpp"
#include "lstc/semantic.hpp"

using namespace lstc;
using testing::S;

namespace {

SurprisalScores scores_for(const Chunk& c, std::vector<double> v) { return {c.id, std::move(v)}; }

CalibrationTable tertile_calib(double t_low, double t_mid, double t_high, double rest) {
  CalibrationTable t;
  t.scheme = CalibrationScheme::tertile;
  t.b_full = {{Bucket::t_low, t_low}, {Bucket::t_mid, t_mid}, {Bucket::t_high, t_high},
              {Bucket::punct, rest},  {Bucket::others, rest}, {Bucket::whitespace, rest}};
  return t;
}

}  // namespace

TEST_CASE("file provider: accepted verbatim") {
  const auto c = make_chunk("f", "one two three four five");
  auto p = FileSurprisalProvider::from_string(
      R"({"id":"f","tokens":["one","two","three","four","five"],"surprisal":[1,2,3,4.5,0]})", "mem");
  const auto s = p.scores(c, tokenize(c));
  CHECK(s.values == std::vector<double>{1, 2, 3, 4.5, 0});
  CHECK(p.name() == "file");
}

TEST_CASE("file provider: errors") {
  const auto c = make_chunk("f", "one two");
  const auto spans = tokenize(c);
  auto missing = FileSurprisalProvider::from_string(R"({"id":"g","tokens":["one","two"],"surprisal":[1,2]})", "m");
  CHECK_THROWS_AS(missing.scores(c, spans), AlignmentError);

  auto short_rec = FileSurprisalProvider::from_string(R"({"id":"f","tokens":["one"],"surprisal":[1]})", "m");
  try {
    short_rec.scores(c, spans);
    FAIL("expected an alignment error");
  } catch (const AlignmentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1 tokens") != std::string::npos);
    CHECK(msg.find("expected 2") != std::string::npos);
  }

  auto wrong = FileSurprisalProvider::from_string(R"({"id":"f","tokens":["one","six"],"surprisal":[1,2]})", "m");
  CHECK_THROWS_AS(wrong.scores(c, spans), AlignmentError);

  CHECK_THROWS_AS(FileSurprisalProvider::from_string("{bad", "m"), ParseError);
  CHECK_THROWS_AS(FileSurprisalProvider::from_string(R"({"id":"f","tokens":["a"],"surprisal":[1,2]})", "m"),
                  ParseError);
  CHECK_THROWS_AS(FileSurprisalProvider("/nonexistent/s.jsonl"), ConfigError);
}

TEST_CASE("alignment check") {
  const auto c = make_chunk("a", "x y z");
  const auto spans = tokenize(c);
  CHECK_NOTHROW(check_alignment(scores_for(c, {1, 2, 3}), spans));
  CHECK_THROWS_AS(check_alignment(scores_for(c, {1, 2}), spans), AlignmentError);
  CHECK_THROWS_AS(check_alignment(scores_for(c, {1, -2, 3}), spans), AlignmentError);
  CHECK_THROWS_AS(check_alignment(scores_for(c, {1, NAN, 3}), spans), AlignmentError);
  CHECK_THROWS_AS(entropy_delete(c, RetentionBudget(0.5), spans, scores_for(c, {1.0}), 0), AlignmentError);
  const auto table = parse_frequency_table("x\t5\n", "m");
  CHECK_THROWS_AS(hybrid_delete(c, RetentionBudget(0.5), spans, scores_for(c, {1.0}), table, HybridConfig(0.5), 0),
                  AlignmentError);
  CHECK_THROWS_AS(entropy_lp_delete(c, RetentionBudget(0.5), spans, scores_for(c, {1.0}),
                                    tertile_calib(0.5, 0.5, 0.5, 0.5), 0),
                  AlignmentError);
}

TEST_CASE("unigram fallback") {
  CHECK(UnigramSurprisalProvider::from_zipf(8.0) == 0.0);
  CHECK(UnigramSurprisalProvider::from_zipf(9.0) == 0.0);
  CHECK(UnigramSurprisalProvider::from_zipf(3.0) == doctest::Approx(11.512925465));
  const auto table = parse_frequency_table("the\t8\ncat\t3\n", "m");
  UnigramSurprisalProvider p(table);
  const auto c = make_chunk("u", "The cat zzz");
  const auto s = p.scores(c, tokenize(c));
  REQUIRE(s.values.size() == 3);
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == doctest::Approx(5 * std::log(10.0)));
  CHECK(s.values[2] == doctest::Approx(8 * std::log(10.0)));
}

TEST_CASE("process provider") {
  const auto c = make_chunk("p", "a bb ccc");
  const auto spans = tokenize(c);
  ProcessSurprisalProvider p(testing::bin_path("surprisal_helper.py"));
  CHECK(p.scores(c, spans).values == std::vector<double>{1, 2, 3});
  CHECK(p.scores(c, spans).values == std::vector<double>{1, 2, 3});  // long-lived
  ProcessSurprisalProvider bad(testing::bin_path("surprisal_helper.py") + " --short");
  CHECK_THROWS_AS(bad.scores(c, spans), AlignmentError);
}

TEST_CASE("entropy_delete: examples") {
  const auto c = make_chunk("e", "aaa bbb ccc");
  const auto spans = tokenize(c);
  const RetentionBudget b(0.64);  // round(7.04) = 7 kept, one word plus its space out
  const auto m = entropy_delete(c, b, spans, scores_for(c, {0.1, 9.0, 0.2}), 0);
  CHECK(S(apply_mask(c.text, m)) == "bbb ccc");

  const auto eq = entropy_delete(c, b, spans, scores_for(c, {1.0, 1.0, 1.0}), 0);
  CHECK(S(apply_mask(c.text, eq)) == "bbb ccc");  // positional tie order

  CHECK(entropy_delete(c, RetentionBudget(1.0), spans, scores_for(c, {0.1, 9.0, 0.2}), 0).kept() == 11);
  CHECK(entropy_order({0.3, 0.1, 0.3, 0.0}) == std::vector<std::size_t>{3, 1, 0, 2});
}

TEST_CASE("entropy_delete: trim keeps a word prefix for the exact count") {
  const auto c = make_chunk("e", "aaa bbb ccc");
  const auto spans = tokenize(c);
  const auto m = entropy_delete(c, RetentionBudget(0.82), spans, scores_for(c, {0.1, 9.0, 0.2}), 0);
  // round(9.02) = 9 kept: the two trailing units of "aaa" go
  CHECK(S(apply_mask(c.text, m)) == "a bbb ccc");
}

TEST_CASE("tertiles") {
  const auto t9 = surprisal_tertiles({9, 1, 5, 3, 7, 2, 8, 4, 6});
  CHECK(std::count(t9.begin(), t9.end(), Bucket::t_low) == 3);
  CHECK(std::count(t9.begin(), t9.end(), Bucket::t_mid) == 3);
  CHECK(std::count(t9.begin(), t9.end(), Bucket::t_high) == 3);
  CHECK(t9[1] == Bucket::t_low);
  CHECK(t9[0] == Bucket::t_high);

  const auto tied = surprisal_tertiles({1, 1, 1, 1, 2, 3});
  CHECK(tied[0] == Bucket::t_low);
  CHECK(tied[3] == Bucket::t_low);  // ties share the tertile of their first rank
  CHECK(surprisal_tertiles({1, 2}) == std::vector<Bucket>{Bucket::t_mid, Bucket::t_mid});
  CHECK(surprisal_tertiles({}).empty());
}

TEST_CASE("entropy_lp: cheapest tertile exhausted first") {
  const auto c = make_chunk("l", "aa bb cc dd ee ff gg hh ii");
  const auto spans = tokenize(c);
  const auto scores = scores_for(c, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto profile = tertile_profile(spans, scores);
  const auto calib = tertile_calib(0.9, 0.5, 0.1, 0.99);
  // 13 of 26 units go: all 8 whitespace units, then 5 of the 6 T_LOW units
  const auto w = solve_allocation(profile, calib, 0.5);
  CHECK(w.weight(Bucket::whitespace) == 1.0);
  CHECK(w.weight(Bucket::t_low) == doctest::Approx(5.0 / 6.0));
  CHECK(w.weight(Bucket::t_mid) == 0.0);
  CHECK(w.weight(Bucket::t_high) == 0.0);
  const auto s = entropy_lp_delete(c, RetentionBudget(0.5), spans, scores, calib, 0);
  CHECK(s.strategy == "entropy_lp");
  CHECK(S(s.text) == "cddeeffgghhii");
}

TEST_CASE("entropy_lp: degenerate chunks") {
  const auto calib = tertile_calib(0.8, 0.7, 0.6, 0.9);
  const auto c = make_chunk("d", "hello world");
  const auto spans = tokenize(c);
  const auto profile = tertile_profile(spans, scores_for(c, {1.0, 2.0}));
  CHECK(profile.count(Bucket::t_mid) == 10);
  for (int rr = 1; rr <= 10; ++rr) {
    const RetentionBudget b(rr / 10.0);
    CHECK(entropy_lp_delete(c, b, spans, scores_for(c, {1.0, 2.0}), calib, 1).text.size() ==
          b.target_kept(c.length()));
  }
  // identical surprisal collapses to one tertile
  const auto c2 = make_chunk("d2", "aa bb cc dd ee ff");
  const auto s2 = scores_for(c2, std::vector<double>(6, 2.5));
  CHECK(tertile_profile(tokenize(c2), s2).count(Bucket::t_low) == 12);
  CHECK(entropy_lp_delete(c2, RetentionBudget(0.3), tokenize(c2), s2, calib, 1).text.size() ==
        RetentionBudget(0.3).target_kept(c2.length()));
}

TEST_CASE("entropy_in_freqbuckets: lowest surprisal first inside the bucket") {
  const auto c = make_chunk("f", "aaaa bbbb cccc dddd");
  const auto spans = tokenize(c);
  const auto table = parse_frequency_table("zzz\t5\n", "m");  // every word LOW
  const auto profile = classify(c, spans, table, BucketScheme{});
  CalibrationTable calib;
  for (auto b : calibration_buckets(CalibrationScheme::six_class)) calib.b_full[b] = 0.0;
  calib.b_full[Bucket::low] = 0.99;
  const RetentionBudget b(0.79);  // round(15.01) = 15
  const auto s = entropy_in_freqbuckets_delete(c, b, spans, scores_for(c, {3.0, 0.5, 1.0, 2.0}), profile,
                                               calib, 0);
  CHECK(S(s.text) == "aaaa  cccc dddd");
  CHECK(s.strategy == "entropy_freqbkt");

  const auto eq = entropy_in_freqbuckets_delete(c, b, spans, scores_for(c, {1, 1, 1, 1}), profile, calib, 0);
  CHECK(S(eq.text) == " bbbb cccc dddd");
  CHECK(entropy_in_freqbuckets_delete(c, RetentionBudget(1.0), spans, scores_for(c, {1, 1, 1, 1}), profile,
                                      calib, 0)
            .text == c.text);
}

TEST_CASE("hybrid: ranks, example and boundary reductions") {
  CHECK(normalized_ranks({5.0}) == std::vector<double>{0.0});
  CHECK(normalized_ranks({3, 1, 2}) == std::vector<double>{1.0, 0.0, 0.5});
  CHECK(normalized_ranks({1, 1, 2}) == std::vector<double>{0.25, 0.25, 1.0});

  const std::vector<double> zipf{9, 5, 1};       // freq_norm [0, 0.5, 1]
  const std::vector<double> surprisal{9, 1, 5};  // surp_norm [1, 0, 0.5]
  const auto combined = hybrid_scores(zipf, surprisal, HybridConfig(0.5));
  CHECK(combined[0] == doctest::Approx(0.5));
  CHECK(combined[1] == doctest::Approx(0.25));
  CHECK(combined[2] == doctest::Approx(0.75));
  CHECK(hybrid_order(zipf, surprisal, HybridConfig(0.5)).front() == 1);

  CHECK_THROWS_AS(HybridConfig(1.5), ConfigError);
  CHECK_THROWS_AS(HybridConfig(-0.1), ConfigError);
}

TEST_CASE("hybrid: alpha boundaries reproduce single-signal orders on the fixture corpus") {
  const auto table = load_frequency_table(testing::data_path("freq_en.tsv"));
  const auto corpus = ingest_corpus(testing::data_path("corpus_en.jsonl"));
  FileSurprisalProvider provider(testing::data_path("surprisal_en.jsonl"));
  for (std::size_t i = 0; i < corpus.size(); i += 5) {
    const auto& c = corpus[i];
    const auto spans = tokenize(c);
    const auto s = provider.scores(c, spans);
    const auto z = word_zipf(c, spans, table);
    CHECK(hybrid_order(z, s.values, HybridConfig(1.0)) == frequency_order(z));
    CHECK(hybrid_order(z, s.values, HybridConfig(0.0)) == entropy_order(s.values));
    const auto sk = hybrid_delete(c, RetentionBudget(0.4), spans, s, table, HybridConfig(0.3), 2);
    CHECK(sk.text.size() == RetentionBudget(0.4).target_kept(c.length()));
    CHECK(sk.extra["alpha"].get<double>() == 0.3);
    CHECK(sk.strategy == "hybrid@0.3");
  }
}

TEST_CASE("level 3 strategies keep the exact rate on the fixture corpus") {
  const auto table = load_frequency_table(testing::data_path("freq_en.tsv"));
  const auto calib6 = load_calibration(testing::data_path("calib_6.json"));
  const auto calibt = load_calibration(testing::data_path("calib_tertile.json"));
  const auto corpus = ingest_corpus(testing::data_path("corpus_en.jsonl"));
  FileSurprisalProvider provider(testing::data_path("surprisal_en.jsonl"));
  for (std::size_t i = 0; i < corpus.size(); i += 17) {
    const auto& c = corpus[i];
    const auto spans = tokenize(c);
    const auto s = provider.scores(c, spans);
    const auto profile = classify(c, spans, table, BucketScheme{});
    for (int rr = 1; rr <= 9; ++rr) {
      const RetentionBudget b(rr / 10.0);
      const auto k = b.target_kept(c.length());
      CHECK(entropy_delete(c, b, spans, s, 0).kept() == k);
      CHECK(entropy_lp_delete(c, b, spans, s, calibt, 0).text.size() == k);
      const auto f = entropy_in_freqbuckets_delete(c, b, spans, s, profile, calib6, 0);
      CHECK(f.text.size() == k);
      CHECK(is_subsequence(f.text, c.text));
      CHECK(f.text == entropy_in_freqbuckets_delete(c, b, spans, s, profile, calib6, 0).text);
    }
  }
}
