#include "debias/validator.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "debias/error.hpp"

namespace debias {
namespace detail {
extern const std::string_view kFunctionWordsFile;
}

namespace {

struct FunctionWordList {
  std::set<std::string, std::less<>> words;
  std::string version = "unversioned";
};

const FunctionWordList& function_word_list() {
  static const FunctionWordList list = [] {
    FunctionWordList out;
    std::istringstream in{std::string(detail::kFunctionWordsFile)};
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        constexpr std::string_view kTag = "# version:";
        if (line.starts_with(kTag)) {
          auto v = line.substr(kTag.size());
          v.erase(0, v.find_first_not_of(' '));
          out.version = v;
        }
        continue;
      }
      out.words.insert(line);
    }
    return out;
  }();
  return list;
}

bool strip_byte(unsigned char c) { return std::ispunct(c) && c != '_'; }

std::map<std::string, std::size_t> multiset(const std::vector<std::string>& words) {
  std::map<std::string, std::size_t> m;
  for (const auto& w : words) ++m[w];
  return m;
}

bool contains(const std::vector<std::string>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

}  // namespace

const std::set<std::string, std::less<>>& default_function_words() {
  return function_word_list().words;
}

std::string_view function_words_version() { return function_word_list().version; }

void TwinConstraints::validate() const {
  if (min_words == 0 || min_words > max_words)
    throw InvalidArgument("twin constraints: need 0 < min_words <= max_words");
  if (!(min_overlap >= 0.0 && min_overlap <= 1.0))
    throw InvalidArgument("twin constraints: min_overlap must lie in [0, 1]");
}

std::vector<std::string> sentence_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t end = i;
    while (start < end && strip_byte(static_cast<unsigned char>(text[start]))) ++start;
    while (end > start && strip_byte(static_cast<unsigned char>(text[end - 1]))) --end;
    if (start == end) continue;
    std::string w(text.substr(start, end - start));
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    words.push_back(std::move(w));
  }
  return words;
}

double word_overlap(std::string_view s1, std::string_view s2) {
  const auto w1 = sentence_words(s1);
  const auto w2 = sentence_words(s2);
  const std::size_t denom = std::max(w1.size(), w2.size());
  if (denom == 0) return 1.0;
  const auto m1 = multiset(w1);
  const auto m2 = multiset(w2);
  std::size_t shared = 0;
  for (const auto& [w, c] : m1) {
    auto it = m2.find(w);
    if (it != m2.end()) shared += std::min(c, it->second);
  }
  return static_cast<double>(shared) / static_cast<double>(denom);
}

std::vector<std::string> ValidationVerdict::rules() const {
  std::vector<std::string> out;
  for (const auto& v : violations) out.push_back(v.rule);
  return out;
}

nlohmann::ordered_json ValidationVerdict::to_json() const {
  nlohmann::ordered_json j;
  j["twin_group"] = twin_group;
  j["pass"] = pass;
  auto list = nlohmann::ordered_json::array();
  for (const auto& v : violations) list.push_back({{"rule", v.rule}, {"detail", v.detail}});
  j["violations"] = std::move(list);
  j["overlap"] = overlap;
  j["overlap_denominator"] = overlap_denominator;
  return j;
}

ValidationVerdict check_twin(const Instance& first, const Instance& second,
                             const std::optional<std::string>& anchor,
                             const TwinConstraints& constraints) {
  constraints.validate();
  ValidationVerdict verdict;
  verdict.twin_group = first.twin_group.value_or(first.id);
  auto add = [&](std::string_view rule, std::string detail) {
    verdict.violations.push_back({std::string(rule), std::move(detail)});
  };

  if (!first.twin_group || first.twin_group != second.twin_group)
    add(violation::kNotTwins, "instances '" + first.id + "' and '" + second.id +
                                  "' do not share a twin_group");

  const std::array<const Instance*, 2> pair{&first, &second};
  std::array<std::vector<std::string>, 2> words{sentence_words(first.sentence),
                                                sentence_words(second.sentence)};
  for (std::size_t s = 0; s < 2; ++s) {
    const auto count = words[s].size();
    if (count < constraints.min_words || count > constraints.max_words)
      add(violation::kLength, "sentence " + std::to_string(s + 1) + " ('" + pair[s]->id + "') has " +
                                  std::to_string(count) + " words, allowed [" +
                                  std::to_string(constraints.min_words) + ", " +
                                  std::to_string(constraints.max_words) + "]");
  }

  verdict.overlap = word_overlap(first.sentence, second.sentence);
  if (verdict.overlap < constraints.min_overlap) {
    std::ostringstream d;
    d << "word overlap " << verdict.overlap << " below " << constraints.min_overlap;
    add(violation::kOverlap, d.str());
  }

  if (anchor) {
    const auto anchor_words = sentence_words(*anchor);
    const bool all_function =
        !anchor_words.empty() &&
        std::all_of(anchor_words.begin(), anchor_words.end(),
                    [&](const std::string& w) { return constraints.function_words.contains(w); });
    if (anchor_words.empty() || all_function)
      add(violation::kFunctionWordAnchor, "anchor '" + *anchor + "' is a function word");
    for (std::size_t s = 0; s < 2; ++s) {
      const bool present =
          !anchor_words.empty() &&
          std::all_of(anchor_words.begin(), anchor_words.end(),
                      [&](const std::string& w) { return contains(words[s], w); });
      if (!present)
        add(violation::kAnchorMissing,
            "anchor '" + *anchor + "' absent from sentence " + std::to_string(s + 1));
    }
  } else if (constraints.require_anchor) {
    add(violation::kAnchorRequired, "no anchor word supplied");
  }

  for (std::size_t s = 0; s < 2; ++s) {
    const auto blanks = count_blanks(pair[s]->sentence);
    if (blanks != 1)
      add(violation::kBlank, "sentence " + std::to_string(s + 1) + " has " +
                                 std::to_string(blanks) + " blanks, expected 1");
  }
  for (std::size_t s = 0; s < 2; ++s)
    if (options_equivalent(pair[s]->option1, pair[s]->option2))
      add(violation::kOptionsIdentical,
          "sentence " + std::to_string(s + 1) + " has identical options");
  if (first.label == second.label)
    add(violation::kSameLabel, "both twins have answer " + std::to_string(first.label));

  verdict.pass = verdict.violations.empty();
  return verdict;
}

bool aggregate_votes(const ValidationRecord& record, int gold) {
  const auto correct = std::count(record.answers.begin(), record.answers.end(), gold);
  const auto unambiguous = std::count(record.unambiguous.begin(), record.unambiguous.end(), true);
  const auto flagged =
      std::count(record.word_association.begin(), record.word_association.end(), true);
  return correct >= 2 && unambiguous >= 2 && flagged <= 1;
}

ValidationRecord parse_validation_record(const nlohmann::json& j) {
  ValidationRecord rec;
  try {
    rec.id = j.at("id").get<std::string>();
    const auto& answers = j.at("answers");
    const auto& unambiguous = j.at("unambiguous");
    const auto& association = j.at("word_association");
    if (answers.size() != 3 || unambiguous.size() != 3 || association.size() != 3)
      throw FormatError("validation record '" + rec.id + "': expected exactly 3 votes of each kind");
    for (std::size_t w = 0; w < 3; ++w) {
      rec.answers[w] = answers[w].get<int>();
      if (rec.answers[w] != 1 && rec.answers[w] != 2)
        throw FormatError("validation record '" + rec.id + "': answer outside {1,2}");
      rec.unambiguous[w] = unambiguous[w].get<bool>();
      rec.word_association[w] = association[w].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("validation record: ") + e.what());
  }
  return rec;
}

}  // namespace debias
