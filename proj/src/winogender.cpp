#include "debias/winogender.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "debias/error.hpp"

namespace debias {
namespace {

std::string lower_trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool parse_bool(std::string_view field, std::string_view source, std::size_t line,
                const char* name) {
  const auto v = lower_trim(field);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  std::ostringstream msg;
  msg << source << ":" << line << ": field '" << name << "': expected a boolean, got '" << field
      << "'";
  throw FormatError(msg.str());
}

nlohmann::ordered_json cell_json(const CellStats& c) {
  return {{"correct", c.correct},
          {"total", c.total},
          {"accuracy", c.accuracy()},
          {"accuracy_display", round1(c.accuracy())}};
}

}  // namespace

double CellStats::accuracy() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

double round1(double value) {
  // Nudge past representation error so that e.g. 14.25 rounds up.
  return std::floor(value * 10.0 + 0.5 + 1e-9) / 10.0;
}

nlohmann::ordered_json GapReport::to_json() const {
  nlohmann::ordered_json j;
  j["female_non_gotcha"] = cell_json(female_non_gotcha);
  j["female_gotcha"] = cell_json(female_gotcha);
  j["male_non_gotcha"] = cell_json(male_non_gotcha);
  j["male_gotcha"] = cell_json(male_gotcha);
  j["delta_f"] = delta_f;
  j["delta_m"] = delta_m;
  j["abs_delta_f"] = abs_delta_f;
  j["abs_delta_m"] = abs_delta_m;
  j["display"] = {{"delta_f", round1(delta_f)},
                  {"delta_m", round1(delta_m)},
                  {"abs_delta_f", round1(abs_delta_f)},
                  {"abs_delta_m", round1(abs_delta_m)}};
  return j;
}

GapReport gender_gap(std::span<const GenderedRecord> records) {
  GapReport r;
  for (const auto& rec : records) {
    CellStats& cell = rec.gender == Gender::kFemale
                          ? (rec.gotcha ? r.female_gotcha : r.female_non_gotcha)
                          : (rec.gotcha ? r.male_gotcha : r.male_non_gotcha);
    ++cell.total;
    if (rec.correct) ++cell.correct;
  }
  std::vector<std::string> empty;
  if (r.female_non_gotcha.total == 0) empty.emplace_back("female/non-gotcha");
  if (r.female_gotcha.total == 0) empty.emplace_back("female/gotcha");
  if (r.male_non_gotcha.total == 0) empty.emplace_back("male/non-gotcha");
  if (r.male_gotcha.total == 0) empty.emplace_back("male/gotcha");
  if (!empty.empty()) {
    std::string msg = "gender_gap: empty cell(s):";
    for (const auto& e : empty) msg += " " + e;
    throw InvalidArgument(msg);
  }
  r.delta_f = r.female_non_gotcha.accuracy() - r.female_gotcha.accuracy();
  r.delta_m = r.male_non_gotcha.accuracy() - r.male_gotcha.accuracy();
  r.abs_delta_f = std::abs(r.delta_f);
  r.abs_delta_m = std::abs(r.delta_m);
  return r;
}

std::vector<GenderedRecord> parse_gender_records(std::string_view content,
                                                 std::string_view source_name) {
  std::vector<GenderedRecord> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lower_trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::string col;
    std::istringstream ls(line);
    while (std::getline(ls, col, '\t')) cols.push_back(col);
    if (line.back() == '\t') cols.emplace_back();
    if (line_no == 1 && !cols.empty() && lower_trim(cols[0]) == "id") continue;
    if (cols.size() != 4) {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": expected 4 tab-separated columns, got "
          << cols.size();
      throw FormatError(msg.str());
    }
    GenderedRecord rec;
    rec.id = cols[0];
    const auto g = lower_trim(cols[1]);
    if (g == "female" || g == "f") {
      rec.gender = Gender::kFemale;
    } else if (g == "male" || g == "m") {
      rec.gender = Gender::kMale;
    } else {
      std::ostringstream msg;
      msg << source_name << ":" << line_no << ": field 'gender': expected female or male, got '"
          << cols[1] << "'";
      throw FormatError(msg.str());
    }
    rec.gotcha = parse_bool(cols[2], source_name, line_no, "gotcha");
    rec.correct = parse_bool(cols[3], source_name, line_no, "correct");
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace debias
