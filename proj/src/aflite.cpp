#include "debias/aflite.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "debias/error.hpp"

namespace debias {
namespace {

// Per-instance outcome of one classifier.
enum Outcome : unsigned char { kNotEvaluated = 0, kWrong = 1, kCorrect = 2 };

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct IterationResult {
  std::vector<unsigned char> outcomes;
  bool degenerate = false;
};

IterationResult run_iteration(const LabeledEmbeddings& current, const FilterParams& params,
                              std::size_t phase_index, std::size_t iteration) {
  const std::size_t count = current.size();
  const std::size_t dim = current.table.dim();
  auto rng = phase_stream(params.seed, phase_index, iteration);
  const Partition part = random_partition(count, params.m, rng);

  Eigen::MatrixXd train(static_cast<Eigen::Index>(part.train.size()), static_cast<Eigen::Index>(dim));
  std::vector<int> train_labels(part.train.size());
  for (std::size_t i = 0; i < part.train.size(); ++i) {
    const auto row = current.table.row(part.train[i]);
    for (std::size_t j = 0; j < dim; ++j)
      train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    train_labels[i] = current.labels[part.train[i]];
  }
  TrainReport report;
  const LinearModel model = train_linear_classifier(train, train_labels, params.train_options(), &report);

  IterationResult result;
  result.degenerate = report.degenerate;
  result.outcomes.assign(count, kNotEvaluated);
  for (auto pos : part.validation)
    result.outcomes[pos] =
        predict(model, current.table.row(pos)) == current.labels[pos] ? kCorrect : kWrong;
  return result;
}

LabeledEmbeddings standardized(const LabeledEmbeddings& data) {
  const std::size_t rows = data.size();
  const std::size_t dim = data.table.dim();
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = data.table.row(r);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
  }
  for (auto& v : mean) v /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = data.table.row(r);
    for (std::size_t j = 0; j < dim; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  for (auto& v : sd) {
    v = std::sqrt(v / static_cast<double>(rows));
    if (v == 0.0) v = 1.0;  // constant column stays at zero
  }
  std::vector<float> values(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = data.table.row(r);
    for (std::size_t j = 0; j < dim; ++j)
      values[r * dim + j] = static_cast<float>((row[j] - mean[j]) / sd[j]);
  }
  return {EmbeddingTable(data.table.ids(), std::move(values), dim), data.labels};
}

}  // namespace

void FilterParams::validate() const {
  if (n < 1) throw InvalidArgument("aflite: ensemble size n must be >= 1");
  if (m < 1) throw InvalidArgument("aflite: training size m must be > 0");
  if (k < 1) throw InvalidArgument("aflite: cutoff k must be > 0");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("aflite: tau must lie in [0, 1]");
  if (!(regularizer_strength >= 0.0) || !std::isfinite(regularizer_strength))
    throw InvalidArgument("aflite: regularizer strength must be finite and nonnegative");
  if (max_opt_iters < 0) throw InvalidArgument("aflite: max_opt_iters must be >= 0");
  if (!(grad_tolerance > 0.0)) throw InvalidArgument("aflite: grad_tolerance must be positive");
}

Partition random_partition(std::size_t count, std::size_t m, Engine& rng) {
  if (count <= m)
    throw InvalidArgument("random_partition: need more than m=" + std::to_string(m) +
                          " instances, got " + std::to_string(count));
  auto order = sample_prefix(count, m, rng);
  Partition part;
  part.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  part.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.end());
  std::sort(part.train.begin(), part.train.end());
  std::sort(part.validation.begin(), part.validation.end());
  return part;
}

std::vector<double> score_instances(std::span<const Tally> tallies) {
  std::vector<double> scores(tallies.size(), 0.0);
  for (std::size_t i = 0; i < tallies.size(); ++i) {
    const auto& t = tallies[i];
    if (t.correct > t.total)
      throw InvalidArgument("score_instances: correct count exceeds total at index " +
                            std::to_string(i));
    if (t.total > 0) scores[i] = static_cast<double>(t.correct) / static_cast<double>(t.total);
  }
  return scores;
}

std::vector<Removal> select_removals(std::span<const std::string> ids,
                                     std::span<const Tally> tallies,
                                     std::span<const double> scores, double tau, std::size_t k) {
  if (ids.size() != tallies.size() || ids.size() != scores.size())
    throw InvalidArgument("select_removals: ids, tallies and scores differ in length");
  std::vector<std::size_t> candidates;
  for (std::size_t e = 0; e < ids.size(); ++e)
    if (tallies[e].total > 0 && scores[e] >= tau) candidates.push_back(e);
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  if (candidates.size() > k) candidates.resize(k);
  std::vector<Removal> out;
  out.reserve(candidates.size());
  for (auto e : candidates) out.push_back({ids[e], scores[e]});
  return out;
}

Engine phase_stream(std::uint64_t seed, std::size_t phase, std::size_t iteration) {
  return make_stream(seed, {static_cast<std::uint64_t>(Stream::kPartition), phase, iteration});
}

PhaseAudit run_phase(const LabeledEmbeddings& current, const FilterParams& params,
                     std::size_t phase_index) {
  params.validate();
  const std::size_t count = current.size();
  if (count <= params.m)
    throw InvalidArgument("run_phase: need more than m=" + std::to_string(params.m) +
                          " instances, got " + std::to_string(count));

  std::vector<IterationResult> results(params.n);
  const unsigned workers =
      static_cast<unsigned>(std::clamp<std::size_t>(params.threads == 0 ? 1 : params.threads, 1, params.n));
  if (workers == 1) {
    for (std::size_t i = 0; i < params.n; ++i) results[i] = run_iteration(current, params, phase_index, i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < params.n; i = next++) {
            try {
              results[i] = run_iteration(current, params, phase_index, i);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!error) error = std::current_exception();
            }
          }
        });
      }
    }
    if (error) std::rethrow_exception(error);
  }

  PhaseAudit audit;
  audit.phase_index = phase_index;
  audit.ids = current.table.ids();
  audit.tallies.assign(count, Tally{});
  for (const auto& r : results) {
    if (r.degenerate) ++audit.degenerate_classifiers;
    for (std::size_t e = 0; e < count; ++e) {
      if (r.outcomes[e] == kNotEvaluated) continue;
      ++audit.tallies[e].total;
      if (r.outcomes[e] == kCorrect) ++audit.tallies[e].correct;
    }
  }
  audit.scores = score_instances(audit.tallies);

  audit.removed = select_removals(audit.ids, audit.tallies, audit.scores, params.tau, params.k);
  audit.survivors = count - audit.removed.size();
  return audit;
}

std::vector<std::string> FilterResult::removed_ids() const {
  std::vector<std::string> out;
  for (const auto& p : phases)
    for (const auto& r : p.removed) out.push_back(r.id);
  return out;
}

nlohmann::ordered_json FilterResult::manifest() const {
  nlohmann::ordered_json j;
  j["algorithm"] = "aflite";
  j["params"] = {{"n", params.n},
                 {"m", params.m},
                 {"k", params.k},
                 {"tau", params.tau},
                 {"seed", params.seed},
                 {"regularizer_strength", params.regularizer_strength},
                 {"max_opt_iters", params.max_opt_iters},
                 {"grad_tolerance", params.grad_tolerance},
                 {"standardize", params.standardize},
                 {"classifier", "l2-logistic-regression/newton"}};
  j["prng"] = {{"family", prng_family}, {"version", kPrngVersion}};
  j["dataset_hash"] = dataset_hash;
  j["input_count"] = input_ids.size();
  j["retained_count"] = retained_ids.size();
  auto phases_json = nlohmann::ordered_json::array();
  for (const auto& p : phases) {
    nlohmann::ordered_json pj;
    pj["phase"] = p.phase_index;
    pj["input_count"] = p.ids.size();
    pj["removed_count"] = p.removed.size();
    pj["survivors"] = p.survivors;
    pj["degenerate_classifiers"] = p.degenerate_classifiers;
    auto removed = nlohmann::ordered_json::array();
    for (const auto& r : p.removed) removed.push_back({{"id", r.id}, {"score", r.score}});
    pj["removed"] = std::move(removed);
    phases_json.push_back(std::move(pj));
  }
  j["phases"] = std::move(phases_json);
  j["retained_ids"] = retained_ids;
  return j;
}

std::string FilterResult::scores_tsv() const {
  struct Row {
    double score = 0.0;
    std::size_t phase = 0;  // 0 = retained
  };
  std::map<std::string, Row, std::less<>> rows;
  for (const auto& id : input_ids) rows[id];
  for (const auto& p : phases) {
    for (std::size_t e = 0; e < p.ids.size(); ++e) rows[p.ids[e]].score = p.scores[e];
    for (const auto& r : p.removed) rows[r.id].phase = p.phase_index;
  }
  std::string out = "id\tfinal_score\tremoval_phase\n";
  for (const auto& [id, row] : rows) {
    out += id + '\t' + format_score(row.score) + '\t' +
           (row.phase == 0 ? std::string("retained") : std::to_string(row.phase)) + '\n';
  }
  return out;
}

FilterResult run_aflite(const LabeledEmbeddings& data, const FilterParams& params) {
  params.validate();
  FilterResult result;
  result.params = params;
  result.dataset_hash = data.content_hash();
  result.prng_family = std::string(kPrngFamily);
  result.input_ids = data.table.ids();

  LabeledEmbeddings working = params.standardize && data.size() > 0 ? standardized(data) : data;
  std::size_t phase = 1;
  while (working.size() > params.m) {
    PhaseAudit audit = run_phase(working, params, phase);
    const std::size_t removed = audit.removed.size();
    if (removed > 0) {
      std::vector<bool> drop(working.size(), false);
      std::map<std::string_view, std::size_t> position;
      for (std::size_t e = 0; e < audit.ids.size(); ++e) position.emplace(audit.ids[e], e);
      for (const auto& r : audit.removed) drop[position.at(r.id)] = true;
      std::vector<std::size_t> keep;
      keep.reserve(working.size() - removed);
      for (std::size_t e = 0; e < working.size(); ++e)
        if (!drop[e]) keep.push_back(e);
      working = working.subset(keep);
    }
    result.phases.push_back(std::move(audit));
    if (removed < params.k) break;
    ++phase;
  }
  result.retained_ids = working.table.ids();
  return result;
}

std::vector<std::string> random_reduce(std::span<const std::string> ids, std::size_t target,
                                       std::uint64_t seed) {
  if (target > ids.size())
    throw InvalidArgument("random_reduce: target " + std::to_string(target) +
                          " exceeds data size " + std::to_string(ids.size()));
  auto rng = make_stream(seed, {static_cast<std::uint64_t>(Stream::kRandomReduce)});
  const auto order = sample_prefix(ids.size(), target, rng);
  std::vector<std::string> out;
  out.reserve(target);
  for (std::size_t i = 0; i < target; ++i) out.push_back(ids[order[i]]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace debias
