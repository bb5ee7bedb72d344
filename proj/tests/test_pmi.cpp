#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "debias/error.hpp"
#include "debias/pmi.hpp"
#include "test_support.hpp"

using namespace debias;
using testing::make_instance;

namespace {

Dataset corpus(const std::vector<std::pair<std::string, int>>& rows) {
  Dataset ds;
  int i = 0;
  for (const auto& [sentence, label] : rows)
    ds.instances.push_back(make_instance("c" + std::to_string(i++), label, std::nullopt, sentence));
  return ds;
}

// Joint distribution over (word, label) from smoothed counts, then PMI read
// off directly from its definition.
std::map<std::string, double> brute_force_pmi(const Dataset& ds, double smoothing) {
  std::map<std::string, std::array<double, 2>> counts;
  for (const auto& inst : ds.instances)
    for (const auto& w : tokenize(inst.sentence)) counts[w][inst.label - 1] += 1;
  double total = 0;
  for (auto& [w, c] : counts) {
    c[0] += smoothing;
    c[1] += smoothing;
    total += c[0] + c[1];
  }
  double py1 = 0;
  for (const auto& [w, c] : counts) py1 += c[0] / total;
  std::map<std::string, double> out;
  for (const auto& [w, c] : counts) {
    const double joint = c[0] / total;
    const double pw = (c[0] + c[1]) / total;
    out[w] = std::log(joint / (pw * py1));
  }
  return out;
}

const std::vector<std::pair<std::string, int>> kPredators = {
    {"The lions are _ predators of the savanna.", 1},
    {"The zebras are _ prey of the savanna.", 2},
    {"Wolves hunt _ deer as predators do.", 1},
    {"Rabbits flee _ because predators chase them.", 2},
    {"Sharks are _ predators.", 1},
    {"Sardines swim in _ schools.", 2},
    {"Eagles are predators of _ mice.", 1},
    {"Mice hide from _ eagles.", 2},
};

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("The trophy doesn't fit.") ==
        std::vector<std::string>{"the", "trophy", "doesn", "t", "fit"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Put _ in the box") == std::vector<std::string>{"put", "in", "the", "box"});
  CHECK(tokenize("caf\xc3\xa9 OK2go") == std::vector<std::string>{"caf\xc3\xa9", "ok2go"});
  for (const auto& [s, l] : kPredators) {
    const auto once = tokenize(s);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("a token spread evenly across balanced labels has zero PMI") {
  const auto ds = corpus({{"apple _ pear", 1}, {"apple _ plum", 2}});
  const auto t = compute_pmi_table(ds);
  CHECK(std::abs(t.pmi("apple")) < 1e-12);
  CHECK(t.pmi("pear") > 0);
  CHECK(t.pmi("plum") < 0);
  CHECK(t.pmi("nonexistent") == 0.0);
  CHECK(t.total_y1 == 2);
  CHECK(t.total_y2 == 2);
}

TEST_CASE("hand corpus matches the brute-force joint distribution") {
  const auto ds = corpus(kPredators);
  for (double s : {0.5, 0.1, 2.0}) {
    const auto t = compute_pmi_table(ds, s);
    const auto want = brute_force_pmi(ds, s);
    REQUIRE(t.tokens.size() == want.size());
    for (const auto& [w, v] : want) CHECK(std::abs(t.pmi(w) - v) < 1e-9);
  }
  const auto t = compute_pmi_table(ds);
  // "predators" occurs four times with label 1 and once with label 2.
  CHECK(t.tokens.at("predators").count_y1 == 4);
  CHECK(t.tokens.at("predators").count_y2 == 1);
  CHECK(t.pmi("predators") > 0);
}

TEST_CASE("duplicating the corpus") {
  auto rows = kPredators;
  auto doubled_rows = rows;
  doubled_rows.insert(doubled_rows.end(), rows.begin(), rows.end());
  const auto once = compute_pmi_table(corpus(rows), 0.5);
  // Doubling every count together with the smoothing is exactly invariant.
  const auto twice = compute_pmi_table(corpus(doubled_rows), 1.0);
  for (const auto& [w, s] : once.tokens) CHECK(std::abs(twice.pmi(w) - s.pmi) < 1e-12);
  // With fixed smoothing the invariance is approximate and tightens as
  // smoothing shrinks.
  const auto tiny1 = compute_pmi_table(corpus(rows), 1e-7);
  const auto tiny2 = compute_pmi_table(corpus(doubled_rows), 1e-7);
  // Tokens seen under only one label have unbounded PMI as smoothing
  // vanishes, so only tokens seen under both labels are compared.
  for (const auto& [w, s] : tiny1.tokens)
    if (s.count_y1 > 0 && s.count_y2 > 0) CHECK(std::abs(tiny2.pmi(w) - s.pmi) < 1e-5);
}

TEST_CASE("degenerate corpora are rejected") {
  CHECK_THROWS_AS(compute_pmi_table(corpus({{"a _", 1}, {"b _", 1}})), InvalidArgument);
  CHECK_THROWS_AS(compute_pmi_table(Dataset{}), InvalidArgument);
  CHECK_THROWS_AS(compute_pmi_table(corpus(kPredators), 0.0), InvalidArgument);
}

TEST_CASE("twin scores: identical twins, antisymmetry and direct sums") {
  const auto ds = corpus(kPredators);
  const auto t = compute_pmi_table(ds);
  const auto a = make_instance("a", 1, "g", "Sharks are _ predators.");
  const auto b = make_instance("b", 2, "g", "Sardines swim in _ schools.");

  const auto same = twin_pmi_score(a, a, t);
  CHECK(same.f_value == 0.0);

  const auto ab = twin_pmi_score(a, b, t);
  const auto ba = twin_pmi_score(b, a, t);
  CHECK(ab.f_value == doctest::Approx(-ba.f_value));
  CHECK(ab.abs_f == std::abs(ab.f_value));
  CHECK(ab.max_pmi == ba.max_pmi);
  CHECK(ab.twin_group == "g");

  const auto want = brute_force_pmi(ds, 0.5);
  double s1 = 0, s2 = 0, mx = -1e300;
  for (const auto& w : tokenize(a.sentence)) s1 += want.at(w), mx = std::max(mx, want.at(w));
  for (const auto& w : tokenize(b.sentence)) s2 += want.at(w), mx = std::max(mx, want.at(w));
  CHECK(std::abs(ab.f_value - (s1 - s2)) < 1e-9);
  CHECK(std::abs(ab.max_pmi - mx) < 1e-9);

  const auto blank = make_instance("x", 1, "h", "_");
  CHECK(twin_pmi_score(blank, blank, t).max_pmi == 0.0);
}

TEST_CASE("pmi_filter thresholds") {
  auto ds = corpus(kPredators);
  ds.instances.push_back(make_instance("t1a", 1, "same", "Sharks are _ predators."));
  ds.instances.push_back(make_instance("t1b", 2, "same", "Sharks are _ predators."));
  ds.instances.push_back(make_instance("t2a", 1, "skewed", "The lions are _ predators of the savanna."));
  ds.instances.push_back(make_instance("t2b", 2, "skewed", "Mice hide from _ eagles."));
  ds.instances.push_back(make_instance("t3a", 1, "mild", "Eagles are predators of _ mice."));
  ds.instances.push_back(make_instance("t3b", 2, "mild", "Eagles are predators of _ prey."));
  ds.instances.push_back(make_instance("lonely", 1, "solo", "Alone _ here."));
  const auto t = compute_pmi_table(ds);
  const auto twins = pair_twins(ds);

  const auto all = pmi_filter(ds, twins, t, INFINITY, PmiMode::kAbsolute);
  CHECK(all.retained_groups.size() == 3);
  CHECK(all.dropped_singletons == twins.groups.size() - 3);

  const auto zero = pmi_filter(ds, twins, t, 0.0, PmiMode::kSigned);
  CHECK(zero.retained_groups == std::vector<std::string>{"same"});

  double mild = 0, skewed = 0;
  for (const auto& s : all.scores) {
    if (s.twin_group == "mild") mild = s.abs_f;
    if (s.twin_group == "skewed") skewed = s.abs_f;
  }
  REQUIRE(mild < skewed);
  const auto mid = pmi_filter(ds, twins, t, (mild + skewed) / 2, PmiMode::kAbsolute);
  CHECK(mid.retained_groups == std::vector<std::string>{"same", "mild"});

  const auto tsv = all.to_tsv();
  CHECK(tsv.rfind("twin_group\tf\tabs_f\tmax_pmi\tretained\n", 0) == 0);
}

TEST_CASE("retention grows with the threshold") {
  std::mt19937_64 gen(4);
  const std::vector<std::string> words = {"red", "blue", "green", "tall", "short", "quick", "slow", "big"};
  Dataset ds;
  for (int g = 0; g < 60; ++g) {
    for (int side = 0; side < 2; ++side) {
      std::string s = "_";
      for (int w = 0; w < 5; ++w) s += " " + words[gen() % words.size()];
      ds.instances.push_back(make_instance("g" + std::to_string(g) + "_" + std::to_string(side),
                                           1 + side, "g" + std::to_string(g), s));
    }
  }
  const auto t = compute_pmi_table(ds);
  const auto twins = pair_twins(ds);
  for (auto mode : {PmiMode::kAbsolute, PmiMode::kMaxPmi}) {
    std::size_t prev = 0;
    for (double th = 0; th < 3; th += 0.05) {
      const auto n = pmi_filter(ds, twins, t, th, mode).retained_groups.size();
      CHECK(n >= prev);
      prev = n;
    }
    CHECK(prev == 60);
  }
}

TEST_CASE("mode names") {
  CHECK(parse_pmi_mode("signed") == PmiMode::kSigned);
  CHECK(parse_pmi_mode("absolute") == PmiMode::kAbsolute);
  CHECK(parse_pmi_mode("max_pmi") == PmiMode::kMaxPmi);
  CHECK(parse_pmi_mode("max-pmi") == PmiMode::kMaxPmi);
  CHECK(to_string(PmiMode::kMaxPmi) == "max_pmi");
  CHECK_THROWS_AS(parse_pmi_mode("loud"), InvalidArgument);
}
