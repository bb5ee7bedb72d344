#include <doctest.h>

#include <algorithm>
#include <array>

#include "debias/error.hpp"
#include "debias/validator.hpp"
#include "validator_fixture.hpp"

using namespace debias;

TEST_CASE("sentence_words strips punctuation and keeps the blank") {
  CHECK(sentence_words("The trophy doesn't fit, because _ is large!") ==
        std::vector<std::string>{"the", "trophy", "doesn't", "fit", "because", "_", "is", "large"});
  CHECK(sentence_words("  ").empty());
  CHECK(sentence_words("(_)") == std::vector<std::string>{"_"});
}

TEST_CASE("word overlap") {
  CHECK(word_overlap("a b c", "a b c") == 1.0);
  CHECK(word_overlap("a b c", "d e f") == 0.0);
  CHECK(word_overlap("", "") == 1.0);
  CHECK(word_overlap("a", "") == 0.0);
  // Hand count: 12 words each, only the trigger differs.
  const std::string a = "The trophy doesn't fit into the brown suitcase because it's too large.";
  const std::string b = "The trophy doesn't fit into the brown suitcase because it's too small.";
  CHECK(word_overlap(a, b) == doctest::Approx(11.0 / 12.0));
  CHECK(word_overlap(a, b) >= 0.9);
  // Multiset, not set: a repeated word is matched at most as often as it occurs.
  CHECK(word_overlap("the the the cat", "the cat dog bird") == doctest::Approx(0.5));
  CHECK(word_overlap("x y", "x y z w") == word_overlap("x y z w", "x y"));
  CHECK(word_overlap("B a", "a b") == 1.0);
}

TEST_CASE("function word list is loaded and versioned") {
  const auto& fw = default_function_words();
  for (const char* w : {"the", "it", "he", "of"}) CHECK(fw.contains(w));
  CHECK_FALSE(fw.contains("trophy"));
  CHECK(function_words_version() == "1");
}

TEST_CASE("ten-twin fixture produces the expected violation lists") {
  const TwinConstraints constraints;
  for (const auto& c : fixture::twin_cases()) {
    INFO(c.name);
    const auto v = check_twin(c.first, c.second, c.anchor, constraints);
    CHECK(v.rules() == c.expected_rules);
    CHECK(v.pass == c.expected_rules.empty());
    CHECK(v.twin_group == "tw_" + c.name);
  }
}

TEST_CASE("check_twin details") {
  const auto cases = fixture::twin_cases();
  const auto& ok = cases[0];
  const auto v = check_twin(ok.first, ok.second, ok.anchor, TwinConstraints{});
  CHECK(v.overlap == doctest::Approx(19.0 / 20.0));
  CHECK(v.to_json()["overlap_denominator"] == "max");

  TwinConstraints need_anchor;
  need_anchor.require_anchor = true;
  CHECK(check_twin(ok.first, ok.second, std::nullopt, need_anchor).rules() ==
        std::vector<std::string>{"anchor-required"});

  auto stranger = ok.second;
  stranger.twin_group = "other";
  CHECK(check_twin(ok.first, stranger, ok.anchor, TwinConstraints{}).rules() ==
        std::vector<std::string>{"not-twins"});

  // Swapping the pair changes nothing but per-sentence numbering.
  for (const auto& c : cases) {
    auto a = check_twin(c.first, c.second, c.anchor, TwinConstraints{});
    auto b = check_twin(c.second, c.first, c.anchor, TwinConstraints{});
    auto ra = a.rules(), rb = b.rules();
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    CHECK(ra == rb);
    CHECK(a.overlap == b.overlap);
  }

  TwinConstraints bad;
  bad.min_words = 40;
  CHECK_THROWS_AS(check_twin(ok.first, ok.second, ok.anchor, bad), InvalidArgument);
}

TEST_CASE("vote aggregation") {
  ValidationRecord r;
  r.answers = {1, 1, 1};
  r.unambiguous = {true, true, true};
  r.word_association = {false, false, false};
  CHECK(aggregate_votes(r, 1));
  CHECK_FALSE(aggregate_votes(r, 2));
  r.answers = {1, 2, 2};
  CHECK_FALSE(aggregate_votes(r, 1));
  r.answers = {1, 1, 2};
  r.unambiguous = {true, false, false};
  CHECK_FALSE(aggregate_votes(r, 1));
  r.unambiguous = {true, false, true};
  r.word_association = {true, false, true};
  CHECK_FALSE(aggregate_votes(r, 1));
  r.word_association = {true, false, false};
  CHECK(aggregate_votes(r, 1));
}

TEST_CASE("vote aggregation ignores worker order") {
  const auto pool = fixture::vote_pool(200, 120, 3);
  const std::array<std::array<int, 3>, 6> perms = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    const auto& r = pool.records[i];
    const bool base = aggregate_votes(r, pool.gold[i]);
    for (const auto& p : perms) {
      ValidationRecord q = r;
      for (int w = 0; w < 3; ++w) {
        q.answers[w] = r.answers[p[w]];
        q.unambiguous[w] = r.unambiguous[p[w]];
        q.word_association[w] = r.word_association[p[w]];
      }
      CHECK(aggregate_votes(q, pool.gold[i]) == base);
    }
  }
}

TEST_CASE("a pool built with 68% valid records retains exactly 68%") {
  const auto pool = fixture::vote_pool(1000, 680, 11);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < pool.records.size(); ++i) kept += aggregate_votes(pool.records[i], pool.gold[i]);
  CHECK(kept == 680);
}

TEST_CASE("validation record parsing") {
  const auto r = parse_validation_record(nlohmann::json::parse(
      R"({"id": "q1", "answers": [1, 2, 1], "unambiguous": [true, true, false], "word_association": [false, false, true]})"));
  CHECK(r.id == "q1");
  CHECK(r.answers == std::array<int, 3>{1, 2, 1});
  CHECK(r.word_association[2]);
  CHECK_THROWS_AS(parse_validation_record(nlohmann::json::parse(
                      R"({"id": "q", "answers": [1, 2], "unambiguous": [true, true, true], "word_association": [false, false, false]})")),
                  FormatError);
  CHECK_THROWS_AS(parse_validation_record(nlohmann::json::parse(
                      R"({"id": "q", "answers": [1, 2, 3], "unambiguous": [true, true, true], "word_association": [false, false, false]})")),
                  FormatError);
  CHECK_THROWS_AS(parse_validation_record(nlohmann::json::parse(R"({"id": "q"})")), FormatError);
}
