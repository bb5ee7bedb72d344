#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "debias/dataset.hpp"

namespace debias {

// Lowercased maximal runs of ASCII alphanumerics (bytes >= 0x80 count as
// word characters so UTF-8 words stay whole). Everything else separates,
// which drops the blank `_`.
std::vector<std::string> tokenize(std::string_view text);

struct TokenStats {
  double count_y1 = 0;  // occurrences in label-1 sentences
  double count_y2 = 0;
  double pmi = 0;       // PMI(y=1; w)
};

struct PmiTable {
  std::map<std::string, TokenStats, std::less<>> tokens;
  double total_y1 = 0;  // raw token occurrences per label
  double total_y2 = 0;
  double smoothing = 0.5;

  // 0 for out-of-vocabulary tokens.
  double pmi(std::string_view token) const;
  // TSV: token, count_y1, count_y2, pmi
  std::string to_tsv() const;
};

// PMI(y=1; w) = log[p(w, y=1) / (p(w) p(y=1))] from token occurrence counts
// over sentences, with `smoothing` added to every joint (w, y) count.
PmiTable compute_pmi_table(const Dataset& dataset, double smoothing = 0.5);

struct TwinPmiScore {
  std::string twin_group;
  double f_value = 0;  // sum PMI over t1 minus sum over t2
  double abs_f = 0;
  double max_pmi = 0;  // max over both sentences of per-token PMI
};

TwinPmiScore twin_pmi_score(const Instance& first, const Instance& second, const PmiTable& table);

enum class PmiMode { kSigned, kAbsolute, kMaxPmi };

// Throws InvalidArgument for unknown names.
PmiMode parse_pmi_mode(std::string_view name);
std::string_view to_string(PmiMode mode);

struct PmiFilterOutput {
  std::vector<TwinPmiScore> scores;  // every paired twin, index order
  std::vector<bool> retained;
  std::vector<std::string> retained_groups;
  std::size_t dropped_singletons = 0;

  // TSV: twin_group, f, abs_f, max_pmi, retained
  std::string to_tsv() const;
};

// Keeps a twin iff |f| <= threshold (signed and absolute modes) or
// max_pmi <= threshold (max_pmi mode). Singletons are always dropped.
PmiFilterOutput pmi_filter(const Dataset& dataset, const TwinIndex& twins, const PmiTable& table,
                           double threshold, PmiMode mode);

}  // namespace debias
