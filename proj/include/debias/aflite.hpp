#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "debias/embeddings.hpp"
#include "debias/logistic.hpp"
#include "debias/rng.hpp"

namespace debias {

struct FilterParams {
  std::size_t n = 64;      // ensemble size
  std::size_t m = 10000;   // training size per classifier; loop floor
  std::size_t k = 500;     // per-phase removal cutoff
  double tau = 0.75;       // score threshold
  std::uint64_t seed = 0;
  double regularizer_strength = 1.0;
  int max_opt_iters = 1000;
  double grad_tolerance = 1e-6;
  bool standardize = false;  // per-column z-scoring of the input
  unsigned threads = 1;      // not part of the result

  void validate() const;
  TrainOptions train_options() const {
    return {regularizer_strength, max_opt_iters, grad_tolerance};
  }
};

struct Partition {
  std::vector<std::size_t> train;       // ascending positions
  std::vector<std::size_t> validation;  // ascending positions
};

// Uniform split of positions [0, count) with |train| = m.
Partition random_partition(std::size_t count, std::size_t m, Engine& rng);

struct Tally {
  std::uint32_t correct = 0;
  std::uint32_t total = 0;
  friend bool operator==(const Tally&, const Tally&) = default;
};

// correct/total, or 0 when the instance was never evaluated.
std::vector<double> score_instances(std::span<const Tally> tallies);

struct Removal {
  std::string id;
  double score = 0.0;
};

// Instances evaluated at least once with score >= tau, ranked by (score
// descending, id ascending), truncated to k.
std::vector<Removal> select_removals(std::span<const std::string> ids,
                                     std::span<const Tally> tallies,
                                     std::span<const double> scores, double tau, std::size_t k);

struct PhaseAudit {
  std::size_t phase_index = 0;
  std::vector<std::string> ids;  // phase input, ascending
  std::vector<Tally> tallies;
  std::vector<double> scores;
  std::vector<Removal> removed;  // (score desc, id asc)
  std::size_t survivors = 0;
  std::size_t degenerate_classifiers = 0;
};

// Seed for classifier `iteration` of phase `phase`.
Engine phase_stream(std::uint64_t seed, std::size_t phase, std::size_t iteration);

// One filtering phase over `current`. Requires |current| > m.
PhaseAudit run_phase(const LabeledEmbeddings& current, const FilterParams& params,
                     std::size_t phase_index);

struct FilterResult {
  std::vector<std::string> input_ids;
  std::vector<std::string> retained_ids;
  std::vector<PhaseAudit> phases;
  FilterParams params;
  std::string dataset_hash;
  std::string prng_family;

  std::vector<std::string> removed_ids() const;
  // Params, hashes and per-phase removals. Deterministic.
  nlohmann::ordered_json manifest() const;
  // Rows: id, final_score, removal phase (1-based) or "retained".
  std::string scores_tsv() const;
};

FilterResult run_aflite(const LabeledEmbeddings& data, const FilterParams& params);

// Uniform subset of exactly `target` ids, ascending.
std::vector<std::string> random_reduce(std::span<const std::string> ids, std::size_t target,
                                       std::uint64_t seed);

}  // namespace debias
