#include "debias/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "debias/aflite.hpp"
#include "debias/dataset.hpp"
#include "debias/diagnostics.hpp"
#include "debias/embeddings.hpp"
#include "debias/error.hpp"
#include "debias/hash.hpp"
#include "debias/pmi.hpp"
#include "debias/rng.hpp"
#include "debias/validator.hpp"
#include "debias/winogender.hpp"

namespace debias {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Defaults for the AfLite flags.
constexpr std::size_t kDefaultM = 10000;
constexpr std::size_t kDefaultN = 64;
constexpr std::size_t kDefaultK = 500;
constexpr double kDefaultTau = 0.75;

std::string default_out_dir() {
  if (const char* env = std::getenv("DEBIAS_OUT"); env && *env) return env;
  return "debias_out";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open id list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::string join_lines(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += id + '\n';
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Collects outputs of one subcommand and writes them with a manifest.
class RunContext {
 public:
  RunContext(std::string subcommand, fs::path out_dir)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)),
        start_(std::chrono::steady_clock::now()), started_at_(utc_now()) {}

  ordered_json& params() { return params_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void add_input(const std::string& role, const fs::path& path) {
    inputs_[role] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }

  void write(const std::string& name, std::string_view content) {
    fs::create_directories(out_dir_);
    std::ofstream out(out_dir_ / name, std::ios::binary);
    if (!out) throw FormatError("cannot write " + (out_dir_ / name).string());
    out << content;
    outputs_[name] = sha256_hex(content);
  }

  void write_json(const std::string& name, const ordered_json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
    ordered_json m;
    m["tool"] = "debias";
    m["tool_version"] = kToolVersion;
    m["subcommand"] = subcommand_;
    m["params"] = params_;
    if (seed_) m["seed"] = *seed_;
    m["prng"] = {{"family", kPrngFamily}, {"version", kPrngVersion}};
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["started_at"] = started_at_;
    m["duration_ms"] = elapsed.count();
    fs::create_directories(out_dir_);
    std::ofstream out(out_dir_ / "manifest.json");
    if (!out) throw FormatError("cannot write manifest in " + out_dir_.string());
    out << m.dump(2) << '\n';
  }

  const fs::path& out_dir() const { return out_dir_; }

 private:
  std::string subcommand_;
  fs::path out_dir_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
  ordered_json params_ = ordered_json::object();
  ordered_json inputs_ = ordered_json::object();
  std::map<std::string, std::string> outputs_;
  std::optional<std::uint64_t> seed_;
};

DatasetFormat resolve_format(const std::string& flag, const fs::path& path) {
  if (flag.empty()) return format_from_extension(path);
  auto f = parse_format(flag);
  if (!f) throw InvalidArgument("unknown dataset format '" + flag + "'");
  return *f;
}

// Groups instances for validation; unlike pair_twins, oversized groups
// and singletons are reported as verdicts rather than errors.
std::vector<std::vector<std::size_t>> validation_groups(const Dataset& ds,
                                                        std::vector<std::string>& names) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& inst = ds.instances[i];
    const std::string key = inst.twin_group.value_or(inst.id);
    if (!inst.twin_group) {
      names.push_back(key);
      groups.push_back({i});
      continue;
    }
    auto [it, inserted] = slot.emplace(key, groups.size());
    if (inserted) {
      names.push_back(key);
      groups.push_back({i});
    } else {
      groups[it->second].push_back(i);
    }
  }
  return groups;
}

std::map<std::string, std::string> read_anchors(const fs::path& path) {
  std::map<std::string, std::string> anchors;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'twin_group<TAB>anchor'");
    if (line_no == 1 && line.substr(0, tab) == "twin_group") continue;
    anchors[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return anchors;
}

struct Options {
  std::string out_dir = default_out_dir();
  // validate
  std::string dataset, format, anchors, votes;
  bool require_anchor = false;
  std::size_t min_words = 15, max_words = 30;
  double min_overlap = 0.70;
  // split
  std::size_t embed_train = 5000, embed_dev = 1000;
  std::vector<std::size_t> sizes;
  // aflite / diagnose / random-reduce
  std::string embeddings, pool, ids;
  std::size_t m = kDefaultM, n = kDefaultN, k = kDefaultK;
  double tau = kDefaultTau;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  int max_iters = 1000;
  double grad_tol = 1e-6;
  bool standardize = false;
  unsigned threads = 1;
  std::size_t target = 0;
  // pmi
  double threshold = 0;
  std::string mode = "signed";
  double smoothing = 0.5;
  // diagnose
  std::size_t bins = 100;
  double epsilon = 1e-6;
  // gender-gap
  std::string records;
  // synth
  std::size_t synth_n = 5000, dim = 64;
  double bias_fraction = 0.4, bias_strength = 3.0;
  // export-csv
  std::string csv_out;
};

int cmd_validate(const Options& o, std::ostream& out) {
  RunContext ctx("validate", o.out_dir);
  const Dataset ds = read_dataset(o.dataset, resolve_format(o.format, o.dataset), ReadMode::kLenient);
  ctx.add_input("dataset", o.dataset);
  TwinConstraints constraints;
  constraints.min_words = o.min_words;
  constraints.max_words = o.max_words;
  constraints.min_overlap = o.min_overlap;
  constraints.require_anchor = o.require_anchor;
  constraints.validate();
  ctx.params() = {{"min_words", o.min_words},
                  {"max_words", o.max_words},
                  {"min_overlap", o.min_overlap},
                  {"require_anchor", o.require_anchor},
                  {"overlap_denominator", "max"},
                  {"function_words_version", function_words_version()}};

  std::map<std::string, std::string> anchors;
  if (!o.anchors.empty()) {
    anchors = read_anchors(o.anchors);
    ctx.add_input("anchors", o.anchors);
  }

  std::vector<std::string> names;
  const auto groups = validation_groups(ds, names);
  std::string verdicts;
  std::size_t failed = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ValidationVerdict verdict;
    if (groups[g].size() == 2) {
      std::optional<std::string> anchor;
      if (auto it = anchors.find(names[g]); it != anchors.end()) anchor = it->second;
      verdict = check_twin(ds.instances[groups[g][0]], ds.instances[groups[g][1]], anchor, constraints);
      verdict.twin_group = names[g];
    } else {
      verdict.twin_group = names[g];
      verdict.pass = false;
      verdict.violations.push_back(
          {std::string(groups[g].size() == 1 ? violation::kNotTwins : violation::kGroupSize),
           "group has " + std::to_string(groups[g].size()) + " member(s), expected 2"});
    }
    if (!verdict.pass) ++failed;
    verdicts += verdict.to_json().dump() + '\n';
  }
  ctx.write("verdicts.jsonl", verdicts);

  std::size_t vote_total = 0, vote_valid = 0;
  if (!o.votes.empty()) {
    ctx.add_input("votes", o.votes);
    const auto index = ds.index();
    std::istringstream in(read_text(o.votes));
    std::string line, results;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line == "\r") continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(o.votes + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
      }
      const auto rec = parse_validation_record(j);
      auto it = index.find(rec.id);
      if (it == index.end())
        throw FormatError(o.votes + ":" + std::to_string(line_no) + ": unknown instance id '" +
                          rec.id + "'");
      const bool valid = aggregate_votes(rec, ds.instances[it->second].label);
      ++vote_total;
      if (valid) ++vote_valid;
      results += ordered_json{{"id", rec.id}, {"valid", valid}}.dump() + '\n';
    }
    ctx.write("votes.jsonl", results);
  }

  ordered_json summary = {{"groups", groups.size()}, {"failed_groups", failed}};
  if (!o.votes.empty()) {
    summary["vote_records"] = vote_total;
    summary["vote_valid"] = vote_valid;
    summary["vote_retention"] =
        vote_total == 0 ? 0.0 : static_cast<double>(vote_valid) / static_cast<double>(vote_total);
  }
  ctx.write_json("summary.json", summary);
  ctx.finish();
  out << "validated " << groups.size() << " groups: " << failed << " failed";
  if (!o.votes.empty()) out << "; votes " << vote_valid << "/" << vote_total << " valid";
  out << '\n';
  return failed == 0 && vote_valid == vote_total ? kExitOk : kExitValidationFailed;
}

int cmd_split(const Options& o, std::ostream& out) {
  RunContext ctx("split", o.out_dir);
  const Dataset ds = read_dataset(o.dataset, resolve_format(o.format, o.dataset));
  ctx.add_input("dataset", o.dataset);
  ctx.set_seed(o.seed);
  ctx.params() = {{"embed_train", o.embed_train}, {"embed_dev", o.embed_dev}, {"sizes", o.sizes}};
  const auto pools = split_pools(ds, o.embed_train, o.embed_dev, o.seed);
  ctx.write("embed_train_ids.txt", join_lines(pools.embed_train_ids));
  ctx.write("embed_dev_ids.txt", join_lines(pools.embed_dev_ids));
  ctx.write("filter_pool_ids.txt", join_lines(pools.filter_pool_ids));
  ordered_json summary = {{"dataset_sha256", ds.provenance.sha256},
                          {"seed", pools.seed},
                          {"sampling", pools.sampling},
                          {"embed_pools_discarded", pools.embed_pools_discarded},
                          {"embed_train", pools.embed_train_ids.size()},
                          {"embed_dev", pools.embed_dev_ids.size()},
                          {"filter_pool", pools.filter_pool_ids.size()}};
  if (!o.sizes.empty()) {
    const auto subsets = subsample_training_sizes(ds, o.sizes, o.seed);
    auto sizes_json = ordered_json::array();
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      const std::string name = "subset_" + std::to_string(o.sizes[i]) + ".txt";
      ctx.write(name, join_lines(subsets[i]));
      sizes_json.push_back({{"size", o.sizes[i]}, {"file", name}});
    }
    summary["training_subsets"] = sizes_json;
  }
  ctx.write_json("pools.json", summary);
  ctx.finish();
  out << "filter pool: " << pools.filter_pool_ids.size() << " ids\n";
  return kExitOk;
}

LabeledEmbeddings load_labeled(const Options& o, RunContext& ctx, const std::string& ids_flag) {
  const Dataset ds = read_dataset(o.dataset, resolve_format(o.format, o.dataset));
  ctx.add_input("dataset", o.dataset);
  const EmbeddingTable table = read_embeddings(o.embeddings);
  ctx.add_input("embeddings", o.embeddings);
  std::vector<std::string> pool;
  if (!ids_flag.empty()) {
    pool = read_id_list(ids_flag);
    ctx.add_input("ids", ids_flag);
  } else {
    for (const auto& inst : ds.instances) pool.push_back(inst.id);
  }
  return align(table, ds, pool);
}

int cmd_aflite(const Options& o, std::ostream& out, std::ostream& err) {
  RunContext ctx("aflite", o.out_dir);
  const auto data = load_labeled(o, ctx, o.pool);
  FilterParams params;
  params.n = o.n;
  params.m = o.m;
  params.k = o.k;
  params.tau = o.tau;
  params.seed = o.seed;
  params.regularizer_strength = o.lambda;
  params.max_opt_iters = o.max_iters;
  params.grad_tolerance = o.grad_tol;
  params.standardize = o.standardize;
  params.threads = o.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : o.threads;
  params.validate();

  if (o.m != kDefaultM) err << "note: --m " << o.m << " differs from the default " << kDefaultM << '\n';
  if (o.n != kDefaultN) err << "note: --n " << o.n << " differs from the default " << kDefaultN << '\n';
  if (o.k != kDefaultK) err << "note: --k " << o.k << " differs from the default " << kDefaultK << '\n';
  if (o.tau != kDefaultTau)
    err << "note: --tau " << o.tau << " differs from the default " << kDefaultTau << '\n';

  ctx.set_seed(o.seed);
  ctx.params() = {{"n", o.n},
                  {"m", o.m},
                  {"k", o.k},
                  {"tau", o.tau},
                  {"regularizer_strength", o.lambda},
                  {"max_opt_iters", o.max_iters},
                  {"grad_tolerance", o.grad_tol},
                  {"standardize", o.standardize},
                  {"threads", params.threads}};

  const FilterResult result = run_aflite(data, params);
  ctx.write_json("filter_result.json", result.manifest());
  ctx.write("scores.tsv", result.scores_tsv());
  ctx.write("retained_ids.txt", join_lines(result.retained_ids));
  ctx.finish();
  out << "aflite: " << result.phases.size() << " phase(s), retained " << result.retained_ids.size()
      << " of " << result.input_ids.size() << '\n';
  return kExitOk;
}

int cmd_pmi(const Options& o, std::ostream& out) {
  RunContext ctx("pmi", o.out_dir);
  Dataset ds = read_dataset(o.dataset, resolve_format(o.format, o.dataset));
  ctx.add_input("dataset", o.dataset);
  if (!o.ids.empty()) {
    const auto keep_list = read_id_list(o.ids);
    const std::set<std::string> keep(keep_list.begin(), keep_list.end());
    std::erase_if(ds.instances, [&](const Instance& inst) { return !keep.contains(inst.id); });
    ctx.add_input("ids", o.ids);
  }
  const auto mode = parse_pmi_mode(o.mode);
  ctx.params() = {{"threshold", o.threshold}, {"mode", to_string(mode)}, {"smoothing", o.smoothing}};
  const auto table = compute_pmi_table(ds, o.smoothing);
  const auto twins = pair_twins(ds);
  const auto filtered = pmi_filter(ds, twins, table, o.threshold, mode);

  std::vector<std::string> retained_ids;
  const std::set<std::string> kept(filtered.retained_groups.begin(), filtered.retained_groups.end());
  for (const auto& inst : ds.instances)
    if (inst.twin_group && kept.contains(*inst.twin_group)) retained_ids.push_back(inst.id);
  std::sort(retained_ids.begin(), retained_ids.end());

  ctx.write("pmi_table.tsv", table.to_tsv());
  ctx.write("twin_scores.tsv", filtered.to_tsv());
  ctx.write("retained_groups.txt", join_lines(filtered.retained_groups));
  ctx.write("retained_ids.txt", join_lines(retained_ids));
  ctx.write_json("pmi_summary.json", {{"smoothing", table.smoothing},
                                      {"vocabulary", table.tokens.size()},
                                      {"tokens_label1", table.total_y1},
                                      {"tokens_label2", table.total_y2},
                                      {"twins", filtered.scores.size()},
                                      {"retained_twins", filtered.retained_groups.size()},
                                      {"dropped_singletons", filtered.dropped_singletons}});
  ctx.finish();
  out << "pmi: retained " << filtered.retained_groups.size() << " of " << filtered.scores.size()
      << " twins\n";
  return kExitOk;
}

int cmd_random_reduce(const Options& o, std::ostream& out) {
  RunContext ctx("random-reduce", o.out_dir);
  const Dataset ds = read_dataset(o.dataset, resolve_format(o.format, o.dataset));
  ctx.add_input("dataset", o.dataset);
  std::vector<std::string> ids;
  if (!o.pool.empty()) {
    ids = read_id_list(o.pool);
    ctx.add_input("pool", o.pool);
  } else {
    for (const auto& inst : ds.instances) ids.push_back(inst.id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  ctx.set_seed(o.seed);
  ctx.params() = {{"target", o.target}};
  const auto retained = random_reduce(ids, o.target, o.seed);
  ctx.write("retained_ids.txt", join_lines(retained));
  ctx.finish();
  out << "random-reduce: retained " << retained.size() << " of " << ids.size() << '\n';
  return kExitOk;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
  RunContext ctx("diagnose", o.out_dir);
  const auto data = load_labeled(o, ctx, o.ids);
  ctx.params() = {{"bins", o.bins}, {"epsilon", o.epsilon}, {"pca", "covariance-eigendecomposition"}};
  const auto report = bias_report(data, o.bins, o.epsilon);
  ctx.write_json("bias_report.json", report.to_json());
  ctx.write("scatter.csv", report.scatter_csv());
  ctx.finish();
  out << "diagnose: KL(label1||label2) = " << report.kl << " over " << data.size() << " instances\n";
  return kExitOk;
}

int cmd_gender_gap(const Options& o, std::ostream& out) {
  RunContext ctx("gender-gap", o.out_dir);
  const auto records = parse_gender_records(read_text(o.records), o.records);
  ctx.add_input("records", o.records);
  const auto report = gender_gap(records);
  ctx.write_json("gap_report.json", report.to_json());
  ctx.finish();
  out.setf(std::ios::fixed);
  out.precision(1);
  out << "female: non-gotcha " << round1(report.female_non_gotcha.accuracy()) << ", gotcha "
      << round1(report.female_gotcha.accuracy()) << ", |dF| " << round1(report.abs_delta_f) << '\n'
      << "male:   non-gotcha " << round1(report.male_non_gotcha.accuracy()) << ", gotcha "
      << round1(report.male_gotcha.accuracy()) << ", |dM| " << round1(report.abs_delta_m) << '\n';
  out.unsetf(std::ios::fixed);
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  RunContext ctx("synth", o.out_dir);
  ctx.set_seed(o.seed);
  ctx.params() = {{"n", o.synth_n},
                  {"dim", o.dim},
                  {"bias_fraction", o.bias_fraction},
                  {"bias_strength", o.bias_strength}};
  const auto set = generate_synthetic_biased(o.synth_n, o.dim, o.bias_fraction, o.bias_strength, o.seed);
  std::vector<Instance> instances;
  instances.reserve(set.data.size());
  for (std::size_t r = 0; r < set.data.size(); ++r) {
    Instance inst;
    inst.id = set.data.table.ids()[r];
    inst.sentence = "Synthetic instance " + inst.id + " fills _ with an option.";
    inst.option1 = "alpha";
    inst.option2 = "beta";
    inst.label = set.data.labels[r];
    instances.push_back(std::move(inst));
  }
  const auto bytes = encode_embeddings(set.data.table);
  ctx.write("embeddings.aflt", std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  ctx.write("dataset.jsonl", format_dataset(instances, DatasetFormat::kJsonl));
  ctx.write("planted_ids.txt", join_lines(set.planted_ids));
  ctx.finish();
  out << "synth: " << set.data.size() << " x " << o.dim << ", " << set.planted_ids.size()
      << " planted\n";
  return kExitOk;
}

int cmd_export_csv(const Options& o, std::ostream& out) {
  const auto table = read_embeddings(o.embeddings);
  write_embeddings_csv(o.csv_out, table);
  out << "wrote " << table.rows() << " rows to " << o.csv_out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset debiasing toolkit: adversarial filtering, PMI and random baselines, bias "
               "diagnostics, corpus validation and gender-gap scoring.",
               "debias"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;

  auto add_out = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out_dir, "Output directory (default: $DEBIAS_OUT or debias_out)");
  };
  auto add_dataset = [&o](CLI::App* sub) {
    sub->add_option("--dataset", o.dataset, "Dataset file (JSONL or TSV)")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", o.format, "jsonl or tsv (default: by extension)");
  };

  auto* validate = app.add_subcommand("validate", "Check twin constraints and aggregate validation votes");
  add_dataset(validate);
  validate->add_option("--anchors", o.anchors, "TSV of twin_group<TAB>anchor")->check(CLI::ExistingFile);
  validate->add_option("--votes", o.votes, "JSONL validation votes")->check(CLI::ExistingFile);
  validate->add_flag("--require-anchor", o.require_anchor, "Fail twins without an anchor");
  validate->add_option("--min-words", o.min_words, "Minimum words per sentence");
  validate->add_option("--max-words", o.max_words, "Maximum words per sentence");
  validate->add_option("--min-overlap", o.min_overlap, "Minimum twin word overlap");
  add_out(validate);

  auto* split = app.add_subcommand("split", "Split embed-tuning pools and nested training subsets");
  add_dataset(split);
  split->add_option("--embed-train", o.embed_train, "Embedding-train pool size");
  split->add_option("--embed-dev", o.embed_dev, "Embedding-dev pool size");
  split->add_option("--sizes", o.sizes, "Ascending training subset sizes")->delimiter(',');
  split->add_option("--seed", o.seed, "Master seed");
  add_out(split);

  auto* aflite = app.add_subcommand("aflite", "Run ensemble adversarial filtering");
  aflite->add_option("--embeddings", o.embeddings, "Binary embedding file")->required()->check(CLI::ExistingFile);
  add_dataset(aflite);
  aflite->add_option("--pool", o.pool, "Id list restricting the filtered pool")->check(CLI::ExistingFile);
  aflite->add_option("--m", o.m, "Training size per classifier");
  aflite->add_option("--n", o.n, "Ensemble size");
  aflite->add_option("--k", o.k, "Per-phase removal cutoff");
  aflite->add_option("--tau", o.tau, "Score threshold");
  aflite->add_option("--seed", o.seed, "Master seed");
  aflite->add_option("--lambda", o.lambda, "L2 regularizer strength");
  aflite->add_option("--max-iters", o.max_iters, "Optimizer iteration cap");
  aflite->add_option("--grad-tol", o.grad_tol, "Gradient max-norm tolerance");
  aflite->add_flag("--standardize", o.standardize, "Z-score feature columns first");
  aflite->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  add_out(aflite);

  auto* pmi = app.add_subcommand("pmi", "PMI-based twin filtering baseline");
  add_dataset(pmi);
  pmi->add_option("--threshold", o.threshold, "Retention threshold")->required();
  pmi->add_option("--mode", o.mode, "signed, absolute or max_pmi");
  pmi->add_option("--smoothing", o.smoothing, "Additive smoothing on joint counts");
  pmi->add_option("--ids", o.ids, "Id list restricting the corpus")->check(CLI::ExistingFile);
  add_out(pmi);

  auto* reduce = app.add_subcommand("random-reduce", "Uniform random data reduction baseline");
  add_dataset(reduce);
  reduce->add_option("--pool", o.pool, "Id list to reduce (default: whole dataset)")->check(CLI::ExistingFile);
  reduce->add_option("--target", o.target, "Number of ids to keep")->required();
  reduce->add_option("--seed", o.seed, "Master seed");
  add_out(reduce);

  auto* diagnose = app.add_subcommand("diagnose", "PCA + label histogram KL bias report");
  diagnose->add_option("--embeddings", o.embeddings, "Binary embedding file")->required()->check(CLI::ExistingFile);
  add_dataset(diagnose);
  diagnose->add_option("--ids", o.ids, "Id list to diagnose (default: whole dataset)")->check(CLI::ExistingFile);
  diagnose->add_option("--bins", o.bins, "Histogram bins");
  diagnose->add_option("--epsilon", o.epsilon, "Per-bin smoothing");
  add_out(diagnose);

  auto* gap = app.add_subcommand("gender-gap", "Gender gap diagnostics from prediction records");
  gap->add_option("--records", o.records, "TSV of id, gender, gotcha, correct")->required()->check(CLI::ExistingFile);
  add_out(gap);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic planted-bias dataset");
  synth->add_option("--n", o.synth_n, "Instances");
  synth->add_option("--dim", o.dim, "Embedding dimension");
  synth->add_option("--bias-fraction", o.bias_fraction, "Fraction of planted instances");
  synth->add_option("--bias-strength", o.bias_strength, "Planted offset magnitude");
  synth->add_option("--seed", o.seed, "Master seed");
  add_out(synth);

  auto* csv = app.add_subcommand("export-csv", "Export an embedding file as CSV");
  csv->add_option("--embeddings", o.embeddings, "Binary embedding file")->required()->check(CLI::ExistingFile);
  csv->add_option("--out", o.csv_out, "CSV path")->required();

  if (args.empty()) {
    err << app.help();
    return kExitUsageOrIo;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsageOrIo;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*split) return cmd_split(o, out);
    if (*aflite) return cmd_aflite(o, out, err);
    if (*pmi) return cmd_pmi(o, out);
    if (*reduce) return cmd_random_reduce(o, out);
    if (*diagnose) return cmd_diagnose(o, out);
    if (*gap) return cmd_gender_gap(o, out);
    if (*synth) return cmd_synth(o, out);
    if (*csv) return cmd_export_csv(o, out);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsageOrIo;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsageOrIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsageOrIo;
  }
  err << app.help();
  return kExitUsageOrIo;
}

}  // namespace debias
