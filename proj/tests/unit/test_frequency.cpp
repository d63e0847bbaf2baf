// SPDX-License-Identifier: Apache-2.0

#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "lstc/error.hpp"
#include "lstc/frequency.hpp"

using namespace lstc;

namespace {

FrequencyTable small_table() {
  return parse_frequency_table("the\t7.73\ncat\t4.5\nhi\t5.2\ngo\t5.9\nrare\t3.5\nthree\t3.0\nfour\t4.0\n", "mem");
}

}  // namespace

TEST_CASE("frequency table parsing") {
  const auto t = parse_frequency_table("the\t7.7\n\n", "mem");
  CHECK(t.size() == 1);
  REQUIRE(t.lookup("The").has_value());
  CHECK(*t.lookup("The") == 7.7);
  CHECK_FALSE(t.lookup("xylophone").has_value());

  CHECK(*parse_frequency_table("a\t1\nA\t2\n", "mem").lookup("a") == 2.0);  // last duplicate wins
  CHECK(*parse_frequency_table("w\t1.5\r\n", "mem").lookup("w") == 1.5);
}

TEST_CASE("frequency table errors carry line numbers") {
  try {
    parse_frequency_table("w\tx\n", "f.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  try {
    parse_frequency_table("ok\t1\nnotab\n", "f.tsv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_frequency_table("neg\t-1\n", "f"), ParseError);
  CHECK_THROWS_AS(parse_frequency_table("", "f"), ParseError);
  CHECK_THROWS_AS(load_frequency_table("/nonexistent/freq.tsv"), Error);
}

TEST_CASE("bucket names and tie order") {
  for (std::size_t i = 0; i < kBucketCount; ++i) {
    const auto b = static_cast<Bucket>(i);
    CHECK(parse_bucket(bucket_name(b)) == b);
  }
  CHECK_FALSE(parse_bucket("NOPE").has_value());
  CHECK(bucket_tie_rank(Bucket::whitespace) < bucket_tie_rank(Bucket::punct));
  CHECK(bucket_tie_rank(Bucket::punct) < bucket_tie_rank(Bucket::others));
  CHECK(bucket_tie_rank(Bucket::others) < bucket_tie_rank(Bucket::high));
  CHECK(bucket_tie_rank(Bucket::high) < bucket_tie_rank(Bucket::mid));
  CHECK(bucket_tie_rank(Bucket::mid) < bucket_tie_rank(Bucket::low));
  CHECK(parse_bucket_mode("3") == BucketMode::three_class);
  CHECK_THROWS_AS(parse_bucket_mode("4"), ConfigError);
}

TEST_CASE("zipf thresholds") {
  BucketScheme s;
  CHECK(s.zipf_bucket(std::nullopt) == Bucket::low);
  CHECK(s.zipf_bucket(2.99) == Bucket::low);
  CHECK(s.zipf_bucket(3.0) == Bucket::mid);
  CHECK(s.zipf_bucket(3.99) == Bucket::mid);
  CHECK(s.zipf_bucket(4.0) == Bucket::high);
}

TEST_CASE("six-class classification") {
  const auto table = small_table();
  BucketScheme scheme;

  const auto c = make_chunk("c", "the cat xylo");
  const auto spans = tokenize(c);
  const auto p = classify(c, spans, table, scheme);
  REQUIRE(p.assignment.size() == 5);
  CHECK(p.assignment[0] == Bucket::high);
  CHECK(p.assignment[2] == Bucket::high);
  CHECK(p.assignment[4] == Bucket::low);
  CHECK(p.assignment[1] == Bucket::whitespace);

  const auto ws = make_chunk("w", "   \n");
  const auto pw = classify(ws, tokenize(ws), table, scheme);
  CHECK(pw.mass(Bucket::whitespace) == 1.0);

  const auto ex = make_chunk("e", "Hi, 2 go");
  const auto pe = classify(ex, tokenize(ex), table, scheme);
  CHECK(pe.mass(Bucket::high) == doctest::Approx(4.0 / 8));
  CHECK(pe.mass(Bucket::punct) == doctest::Approx(1.0 / 8));
  CHECK(pe.mass(Bucket::whitespace) == doctest::Approx(2.0 / 8));
  CHECK(pe.mass(Bucket::others) == doctest::Approx(1.0 / 8));
  CHECK(pe.total_units() == 8);

  const auto th = make_chunk("t", "three four");
  const auto pt = classify(th, tokenize(th), table, scheme);
  CHECK(pt.assignment[0] == Bucket::mid);
  CHECK(pt.assignment[2] == Bucket::high);
}

TEST_CASE("three-class classification carries non-words to the preceding word") {
  const auto table = small_table();
  BucketScheme scheme{BucketMode::three_class};
  const auto c = make_chunk("c", ", the xylo.");
  const auto p = classify(c, tokenize(c), table, scheme);
  // ", " leads and joins the first looked-up word (HIGH); "." follows xylo (LOW)
  CHECK(p.count(Bucket::high) == 2 + 3 + 1);
  CHECK(p.count(Bucket::low) == 4 + 1);
  CHECK(p.buckets.size() == 3);
}

TEST_CASE("profile invariants on the fixture corpus") {
  const auto table = load_frequency_table(testing::data_path("freq_en.tsv"));
  const auto corpus = ingest_corpus(testing::data_path("corpus_en.jsonl"));
  for (const auto mode : {BucketMode::three_class, BucketMode::six_class}) {
    BucketScheme scheme{mode};
    for (std::size_t i = 0; i < corpus.size(); i += 7) {
      const auto& c = corpus[i];
      const auto spans = tokenize(c);
      const auto p = classify(c, spans, table, scheme);
      CHECK(p.total_units() == c.length());
      CHECK(std::accumulate(p.p.begin(), p.p.end(), 0.0) == doctest::Approx(1.0));
      const auto units = unit_buckets(spans, p, c.length());
      CHECK(units.size() == c.length());
    }
  }
}

TEST_CASE("word buckets agree between schemes") {
  const auto table = small_table();
  const auto c = make_chunk("c", "The cat, rare; xylo 42 go!");
  const auto spans = tokenize(c);
  const auto p3 = classify(c, spans, table, BucketScheme{BucketMode::three_class});
  const auto p6 = classify(c, spans, table, BucketScheme{BucketMode::six_class});
  for (const auto i : word_span_indices(spans)) CHECK(p3.assignment[i] == p6.assignment[i]);
}
