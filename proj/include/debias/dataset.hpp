#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace debias {

// Literal token marking the blank in a sentence.
inline constexpr std::string_view kBlank = "_";

enum class Domain { kSocial, kPhysical, kOther };

std::string_view to_string(Domain d);
std::optional<Domain> parse_domain(std::string_view s);

// One fill-in-the-blank problem. `label` is the index (1 or 2) of the
// option that correctly fills the blank.
struct Instance {
  std::string id;
  std::string sentence;
  std::string option1;
  std::string option2;
  int label = 1;
  std::optional<std::string> twin_group;
  std::optional<Domain> domain;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Number of whitespace-separated `_` tokens in the sentence.
std::size_t count_blanks(std::string_view sentence);

// Case-insensitive comparison after trimming surrounding whitespace.
bool options_equivalent(std::string_view a, std::string_view b);

// Returns the first violated instance invariant, or nullopt.
std::optional<std::string> instance_violation(const Instance& inst);

struct Provenance {
  std::string path;
  std::string sha256;
};

struct Dataset {
  std::vector<Instance> instances;
  Provenance provenance;

  std::size_t size() const { return instances.size(); }
  // id -> position
  std::map<std::string, std::size_t, std::less<>> index() const;
};

enum class DatasetFormat { kJsonl, kTsv };

std::optional<DatasetFormat> parse_format(std::string_view s);
DatasetFormat format_from_extension(const std::filesystem::path& path);

// Strict mode enforces every Instance invariant. Lenient mode (used by the
// corpus validator) only enforces structure: parseable fields, label in
// {1,2}, unique ids. Violations throw FormatError carrying "path:line".
enum class ReadMode { kStrict, kLenient };

Dataset read_dataset(const std::filesystem::path& path, DatasetFormat format,
                     ReadMode mode = ReadMode::kStrict);
Dataset parse_dataset(std::string_view content, DatasetFormat format,
                      std::string_view source_name = "<memory>",
                      ReadMode mode = ReadMode::kStrict);

std::string format_dataset(std::span<const Instance> instances, DatasetFormat format);
void write_dataset(const std::filesystem::path& path, std::span<const Instance> instances,
                   DatasetFormat format);

struct PoolAssignment {
  std::vector<std::string> embed_train_ids;
  std::vector<std::string> embed_dev_ids;
  std::vector<std::string> filter_pool_ids;
  std::uint64_t seed = 0;
  // Embed-tuning pools are never part of the final dataset.
  bool embed_pools_discarded = true;
  std::string sampling = "uniform-without-replacement";
};

// Every id list keeps dataset order.
PoolAssignment split_pools(const Dataset& dataset, std::size_t embed_train,
                           std::size_t embed_dev, std::uint64_t seed);

// Nested subsets (each a prefix of one seeded permutation), one per size.
// Ids within each subset keep dataset order.
std::vector<std::vector<std::string>> subsample_training_sizes(const Dataset& dataset,
                                                               std::span<const std::size_t> sizes,
                                                               std::uint64_t seed);

struct TwinGroup {
  std::string group;
  std::vector<std::size_t> members;  // dataset positions, one or two
  bool is_pair() const { return members.size() == 2; }
};

// Instances without a twin_group become singleton groups keyed by their id.
struct TwinIndex {
  std::vector<TwinGroup> groups;  // first-appearance order
  std::size_t pair_count() const;
  std::size_t singleton_count() const;
};

TwinIndex pair_twins(const Dataset& dataset);

}  // namespace debias
