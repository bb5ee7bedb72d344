#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace debias {

enum class Gender { kFemale, kMale };

struct GenderedRecord {
  std::string id;
  Gender gender = Gender::kFemale;
  bool gotcha = false;
  bool correct = false;
};

struct CellStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const;  // percent
};

struct GapReport {
  CellStats female_non_gotcha, female_gotcha, male_non_gotcha, male_gotcha;
  double delta_f = 0;  // Acc(F, non-gotcha) - Acc(F, gotcha), full precision
  double delta_m = 0;
  double abs_delta_f = 0;
  double abs_delta_m = 0;

  nlohmann::ordered_json to_json() const;
};

// Round half up to one decimal, for display.
double round1(double value);

// Throws InvalidArgument naming any empty cell.
GapReport gender_gap(std::span<const GenderedRecord> records);

// TSV columns id, gender, gotcha, correct; optional header row. Genders
// female/male (or f/m); booleans true/false/1/0/yes/no.
std::vector<GenderedRecord> parse_gender_records(std::string_view content,
                                                 std::string_view source_name = "<memory>");

}  // namespace debias
