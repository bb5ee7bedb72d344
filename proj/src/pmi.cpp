#include "debias/pmi.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include "debias/error.hpp"

namespace debias {
namespace {

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double PmiTable::pmi(std::string_view token) const {
  auto it = tokens.find(token);
  return it == tokens.end() ? 0.0 : it->second.pmi;
}

std::string PmiTable::to_tsv() const {
  std::string out = "token\tcount_y1\tcount_y2\tpmi\n";
  for (const auto& [token, s] : tokens)
    out += token + '\t' + fmt(s.count_y1) + '\t' + fmt(s.count_y2) + '\t' + fmt(s.pmi) + '\n';
  return out;
}

PmiTable compute_pmi_table(const Dataset& dataset, double smoothing) {
  if (!(smoothing > 0) || !std::isfinite(smoothing))
    throw InvalidArgument("compute_pmi_table: smoothing must be a positive finite number");
  if (dataset.size() == 0) throw InvalidArgument("compute_pmi_table: dataset is empty");
  bool has1 = false, has2 = false;
  for (const auto& inst : dataset.instances) (inst.label == 1 ? has1 : has2) = true;
  if (!has1 || !has2)
    throw InvalidArgument("compute_pmi_table: both labels must be present in the dataset");

  PmiTable table;
  table.smoothing = smoothing;
  for (const auto& inst : dataset.instances) {
    for (auto& tok : tokenize(inst.sentence)) {
      auto& s = table.tokens[tok];
      if (inst.label == 1) {
        s.count_y1 += 1;
        table.total_y1 += 1;
      } else {
        s.count_y2 += 1;
        table.total_y2 += 1;
      }
    }
  }
  const double vocab = static_cast<double>(table.tokens.size());
  const double smoothed_y1 = table.total_y1 + smoothing * vocab;
  const double smoothed_all = table.total_y1 + table.total_y2 + 2.0 * smoothing * vocab;
  for (auto& [token, s] : table.tokens) {
    const double joint = s.count_y1 + smoothing;
    const double marginal = s.count_y1 + s.count_y2 + 2.0 * smoothing;
    // p(w,y=1) / (p(w) p(y=1)) with all probabilities over smoothed counts
    s.pmi = std::log(joint * smoothed_all / (marginal * smoothed_y1));
  }
  return table;
}

TwinPmiScore twin_pmi_score(const Instance& first, const Instance& second, const PmiTable& table) {
  TwinPmiScore score;
  score.twin_group = first.twin_group.value_or(first.id);
  double sum1 = 0, sum2 = 0;
  double max_pmi = -std::numeric_limits<double>::infinity();
  for (const auto& tok : tokenize(first.sentence)) {
    const double v = table.pmi(tok);
    sum1 += v;
    max_pmi = std::max(max_pmi, v);
  }
  for (const auto& tok : tokenize(second.sentence)) {
    const double v = table.pmi(tok);
    sum2 += v;
    max_pmi = std::max(max_pmi, v);
  }
  score.f_value = sum1 - sum2;
  score.abs_f = std::abs(score.f_value);
  score.max_pmi = std::isfinite(max_pmi) ? max_pmi : 0.0;
  return score;
}

PmiMode parse_pmi_mode(std::string_view name) {
  if (name == "signed") return PmiMode::kSigned;
  if (name == "absolute") return PmiMode::kAbsolute;
  if (name == "max_pmi" || name == "max-pmi") return PmiMode::kMaxPmi;
  throw InvalidArgument("unknown PMI filter mode '" + std::string(name) +
                        "' (expected signed, absolute or max_pmi)");
}

std::string_view to_string(PmiMode mode) {
  switch (mode) {
    case PmiMode::kSigned: return "signed";
    case PmiMode::kAbsolute: return "absolute";
    case PmiMode::kMaxPmi: return "max_pmi";
  }
  return "signed";
}

std::string PmiFilterOutput::to_tsv() const {
  std::string out = "twin_group\tf\tabs_f\tmax_pmi\tretained\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    out += s.twin_group + '\t' + fmt(s.f_value) + '\t' + fmt(s.abs_f) + '\t' + fmt(s.max_pmi) +
           '\t' + (retained[i] ? "true" : "false") + '\n';
  }
  return out;
}

PmiFilterOutput pmi_filter(const Dataset& dataset, const TwinIndex& twins, const PmiTable& table,
                           double threshold, PmiMode mode) {
  if (std::isnan(threshold)) throw InvalidArgument("pmi_filter: threshold is NaN");
  if (mode != PmiMode::kSigned && threshold < 0)
    throw InvalidArgument("pmi_filter: threshold must be >= 0 in absolute and max_pmi modes");
  PmiFilterOutput out;
  for (const auto& group : twins.groups) {
    if (!group.is_pair()) {
      ++out.dropped_singletons;
      continue;
    }
    auto score = twin_pmi_score(dataset.instances.at(group.members[0]),
                                dataset.instances.at(group.members[1]), table);
    score.twin_group = group.group;
    const double key = mode == PmiMode::kMaxPmi ? score.max_pmi : score.abs_f;
    const bool keep = key <= threshold;
    if (keep) out.retained_groups.push_back(group.group);
    out.scores.push_back(std::move(score));
    out.retained.push_back(keep);
  }
  return out;
}

}  // namespace debias
