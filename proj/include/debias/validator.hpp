#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "debias/dataset.hpp"

namespace debias {

// Closed-class word list shipped in data/function_words.txt.
const std::set<std::string, std::less<>>& default_function_words();
std::string_view function_words_version();

struct TwinConstraints {
  std::size_t min_words = 15;
  std::size_t max_words = 30;
  double min_overlap = 0.70;
  std::set<std::string, std::less<>> function_words = default_function_words();
  bool require_anchor = false;

  void validate() const;
};

// Lowercased whitespace-separated words with surrounding punctuation
// stripped; the blank `_` counts as a word.
std::vector<std::string> sentence_words(std::string_view text);

// |multiset intersection| / max(|words1|, |words2|); 1.0 when both empty.
double word_overlap(std::string_view s1, std::string_view s2);

namespace violation {
inline constexpr std::string_view kLength = "length";
inline constexpr std::string_view kOverlap = "overlap";
inline constexpr std::string_view kAnchorMissing = "anchor-missing";
inline constexpr std::string_view kAnchorRequired = "anchor-required";
inline constexpr std::string_view kFunctionWordAnchor = "function-word anchor";
inline constexpr std::string_view kBlank = "blank";
inline constexpr std::string_view kOptionsIdentical = "options-identical";
inline constexpr std::string_view kSameLabel = "same-label";
inline constexpr std::string_view kNotTwins = "not-twins";
inline constexpr std::string_view kGroupSize = "group-size";
}  // namespace violation

struct Violation {
  std::string rule;
  std::string detail;
  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationVerdict {
  std::string twin_group;
  bool pass = true;
  std::vector<Violation> violations;
  double overlap = 0;
  std::string overlap_denominator = "max";

  std::vector<std::string> rules() const;
  nlohmann::ordered_json to_json() const;
};

ValidationVerdict check_twin(const Instance& first, const Instance& second,
                             const std::optional<std::string>& anchor,
                             const TwinConstraints& constraints);

struct ValidationRecord {
  std::string id;
  std::array<int, 3> answers{};
  std::array<bool, 3> unambiguous{};
  std::array<bool, 3> word_association{};
};

// Valid iff a majority answered `gold`, a majority judged the options
// unambiguous and a majority did not flag word association.
bool aggregate_votes(const ValidationRecord& record, int gold);

ValidationRecord parse_validation_record(const nlohmann::json& j);

}  // namespace debias
