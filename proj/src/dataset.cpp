#include "debias/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "debias/error.hpp"
#include "debias/hash.hpp"
#include "debias/rng.hpp"

namespace debias {
namespace {

using nlohmann::json;

constexpr std::string_view kTsvHeader = "id\tsentence\toption1\toption2\tlabel\ttwin_group";

std::string_view trim(std::string_view s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void fail(std::string_view source, std::size_t line, std::string_view what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw FormatError(msg.str());
}

std::string require_string(const json& rec, const char* field, std::string_view source,
                           std::size_t line) {
  auto it = rec.find(field);
  if (it == rec.end()) fail(source, line, std::string("field '") + field + "': missing");
  if (!it->is_string()) fail(source, line, std::string("field '") + field + "': expected string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& rec, const char* field,
                                           std::string_view source, std::size_t line) {
  auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    fail(source, line, std::string("field '") + field + "': expected string or null");
  return it->get<std::string>();
}

int parse_label_text(std::string_view text, std::string_view source, std::size_t line) {
  const auto t = trim(text);
  if (t == "1") return 1;
  if (t == "2") return 2;
  fail(source, line, "field 'label': must be 1 or 2 (got '" + std::string(t) + "')");
}

int parse_label_json(const json& rec, std::string_view source, std::size_t line) {
  auto it = rec.find("label");
  if (it == rec.end()) fail(source, line, "field 'label': missing");
  if (it->is_number_integer()) {
    const auto v = it->get<long long>();
    if (v == 1 || v == 2) return static_cast<int>(v);
    fail(source, line, "field 'label': must be 1 or 2 (got " + std::to_string(v) + ")");
  }
  if (it->is_string()) return parse_label_text(it->get<std::string>(), source, line);
  fail(source, line, "field 'label': must be 1 or 2 (got " + it->dump() + ")");
}

Instance parse_jsonl_line(std::string_view text, std::string_view source, std::size_t line) {
  json rec;
  try {
    rec = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source, line, std::string("malformed JSON: ") + e.what());
  }
  if (!rec.is_object()) fail(source, line, "record is not a JSON object");
  Instance inst;
  inst.id = require_string(rec, "id", source, line);
  inst.sentence = require_string(rec, "sentence", source, line);
  inst.option1 = require_string(rec, "option1", source, line);
  inst.option2 = require_string(rec, "option2", source, line);
  inst.label = parse_label_json(rec, source, line);
  inst.twin_group = optional_string(rec, "twin_group", source, line);
  if (auto d = optional_string(rec, "domain", source, line)) {
    inst.domain = parse_domain(*d);
    if (!inst.domain) fail(source, line, "field 'domain': unknown value '" + *d + "'");
  }
  return inst;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Instance parse_tsv_line(std::string_view text, std::string_view source, std::size_t line) {
  const auto cols = split_tabs(text);
  if (cols.size() != 6)
    fail(source, line, "expected 6 tab-separated columns, got " + std::to_string(cols.size()));
  static constexpr const char* kNames[] = {"id", "sentence", "option1", "option2"};
  for (int c = 0; c < 4; ++c)
    if (cols[c].empty()) fail(source, line, std::string("field '") + kNames[c] + "': empty");
  Instance inst;
  inst.id = std::string(cols[0]);
  inst.sentence = std::string(cols[1]);
  inst.option1 = std::string(cols[2]);
  inst.option2 = std::string(cols[3]);
  inst.label = parse_label_text(cols[4], source, line);
  if (!cols[5].empty()) inst.twin_group = std::string(cols[5]);
  return inst;
}

std::vector<std::string> ids_at(const Dataset& dataset, std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  std::vector<std::string> ids;
  ids.reserve(positions.size());
  for (auto p : positions) ids.push_back(dataset.instances[p].id);
  return ids;
}

}  // namespace

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::kSocial: return "social";
    case Domain::kPhysical: return "physical";
    case Domain::kOther: return "other";
  }
  return "other";
}

std::optional<Domain> parse_domain(std::string_view s) {
  if (s == "social") return Domain::kSocial;
  if (s == "physical") return Domain::kPhysical;
  if (s == "other") return Domain::kOther;
  return std::nullopt;
}

std::size_t count_blanks(std::string_view sentence) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < sentence.size()) {
    while (i < sentence.size() && std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    const std::size_t start = i;
    while (i < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[i]))) ++i;
    if (sentence.substr(start, i - start) == kBlank) ++count;
  }
  return count;
}

bool options_equivalent(std::string_view a, std::string_view b) {
  return lower(trim(a)) == lower(trim(b));
}

std::optional<std::string> instance_violation(const Instance& inst) {
  if (inst.id.empty()) return "id is empty";
  const auto blanks = count_blanks(inst.sentence);
  if (blanks != 1)
    return "sentence must contain exactly one blank placeholder '_' (found " +
           std::to_string(blanks) + ")";
  if (options_equivalent(inst.option1, inst.option2)) return "option1 and option2 are identical";
  if (inst.label != 1 && inst.label != 2)
    return "label must be 1 or 2 (got " + std::to_string(inst.label) + ")";
  return std::nullopt;
}

std::map<std::string, std::size_t, std::less<>> Dataset::index() const {
  std::map<std::string, std::size_t, std::less<>> out;
  for (std::size_t i = 0; i < instances.size(); ++i) out.emplace(instances[i].id, i);
  return out;
}

std::optional<DatasetFormat> parse_format(std::string_view s) {
  if (s == "jsonl") return DatasetFormat::kJsonl;
  if (s == "tsv") return DatasetFormat::kTsv;
  return std::nullopt;
}

DatasetFormat format_from_extension(const std::filesystem::path& path) {
  return path.extension() == ".tsv" ? DatasetFormat::kTsv : DatasetFormat::kJsonl;
}

Dataset parse_dataset(std::string_view content, DatasetFormat format, std::string_view source_name,
                      ReadMode mode) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (format == DatasetFormat::kTsv && line_no == 1 && line == kTsvHeader) continue;

    Instance inst = format == DatasetFormat::kJsonl ? parse_jsonl_line(line, source_name, line_no)
                                                    : parse_tsv_line(line, source_name, line_no);
    if (mode == ReadMode::kStrict) {
      if (auto v = instance_violation(inst)) fail(source_name, line_no, *v);
    }
    auto [it, inserted] = first_line.emplace(inst.id, line_no);
    if (!inserted)
      fail(source_name, line_no,
           "duplicate id '" + inst.id + "' (first seen on line " + std::to_string(it->second) +
               ")");
    ds.instances.push_back(std::move(inst));
  }
  if (mode == ReadMode::kStrict) {
    std::unordered_map<std::string, std::size_t> group_sizes;
    for (const auto& inst : ds.instances)
      if (inst.twin_group && ++group_sizes[*inst.twin_group] > 2)
        throw FormatError(std::string(source_name) + ": twin_group '" + *inst.twin_group +
                          "' has more than 2 members");
  }
  ds.provenance.path = std::string(source_name);
  ds.provenance.sha256 = sha256_hex(content);
  return ds;
}

Dataset read_dataset(const std::filesystem::path& path, DatasetFormat format, ReadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), format, path.string(), mode);
}

std::string format_dataset(std::span<const Instance> instances, DatasetFormat format) {
  std::string out;
  if (format == DatasetFormat::kTsv) {
    out.append(kTsvHeader).push_back('\n');
    for (const auto& inst : instances) {
      for (const std::string* field : {&inst.id, &inst.sentence, &inst.option1, &inst.option2})
        if (field->find_first_of("\t\r\n") != std::string::npos)
          throw InvalidArgument("instance '" + inst.id +
                                "': tab or newline inside a field cannot be written as TSV");
      if (inst.twin_group && inst.twin_group->find_first_of("\t\r\n") != std::string::npos)
        throw InvalidArgument("instance '" + inst.id + "': tab or newline inside twin_group");
      out += inst.id + '\t' + inst.sentence + '\t' + inst.option1 + '\t' + inst.option2 + '\t' +
             std::to_string(inst.label) + '\t' + inst.twin_group.value_or("") + '\n';
    }
    return out;
  }
  for (const auto& inst : instances) {
    nlohmann::ordered_json rec;
    rec["id"] = inst.id;
    rec["sentence"] = inst.sentence;
    rec["option1"] = inst.option1;
    rec["option2"] = inst.option2;
    rec["label"] = inst.label;
    rec["twin_group"] = inst.twin_group ? nlohmann::ordered_json(*inst.twin_group) : nullptr;
    rec["domain"] =
        inst.domain ? nlohmann::ordered_json(std::string(to_string(*inst.domain))) : nullptr;
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const Instance> instances,
                   DatasetFormat format) {
  const auto text = format_dataset(instances, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

PoolAssignment split_pools(const Dataset& dataset, std::size_t embed_train, std::size_t embed_dev,
                           std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (embed_train > n || embed_dev > n - embed_train || (n > 0 && embed_train + embed_dev >= n))
    throw InvalidArgument("split_pools: embed pools (" + std::to_string(embed_train) + " + " +
                          std::to_string(embed_dev) + ") must be smaller than the dataset (" +
                          std::to_string(n) + ")");
  auto rng = make_stream(seed, {static_cast<std::uint64_t>(Stream::kPools)});
  auto order = sample_prefix(n, embed_train + embed_dev, rng);
  PoolAssignment pools;
  pools.seed = seed;
  auto begin = order.begin();
  pools.embed_train_ids = ids_at(dataset, {begin, begin + embed_train});
  pools.embed_dev_ids = ids_at(dataset, {begin + embed_train, begin + embed_train + embed_dev});
  pools.filter_pool_ids = ids_at(dataset, {begin + embed_train + embed_dev, order.end()});
  return pools;
}

std::vector<std::vector<std::string>> subsample_training_sizes(const Dataset& dataset,
                                                               std::span<const std::size_t> sizes,
                                                               std::uint64_t seed) {
  if (!std::is_sorted(sizes.begin(), sizes.end()))
    throw InvalidArgument("subsample_training_sizes: sizes must be ascending");
  const std::size_t n = dataset.size();
  if (!sizes.empty() && sizes.back() > n)
    throw InvalidArgument("subsample_training_sizes: size " + std::to_string(sizes.back()) +
                          " exceeds dataset size " + std::to_string(n));
  auto rng = make_stream(seed, {static_cast<std::uint64_t>(Stream::kSubsample)});
  const auto order = sample_prefix(n, sizes.empty() ? 0 : sizes.back(), rng);
  std::vector<std::vector<std::string>> out;
  out.reserve(sizes.size());
  for (auto s : sizes) out.push_back(ids_at(dataset, {order.begin(), order.begin() + s}));
  return out;
}

std::size_t TwinIndex::pair_count() const {
  return static_cast<std::size_t>(
      std::count_if(groups.begin(), groups.end(), [](const auto& g) { return g.is_pair(); }));
}

std::size_t TwinIndex::singleton_count() const { return groups.size() - pair_count(); }

TwinIndex pair_twins(const Dataset& dataset) {
  TwinIndex index;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& inst = dataset.instances[i];
    if (!inst.twin_group) {
      index.groups.push_back({inst.id, {i}});
      continue;
    }
    auto [it, inserted] = slot.emplace(*inst.twin_group, index.groups.size());
    if (inserted) {
      index.groups.push_back({*inst.twin_group, {i}});
      continue;
    }
    auto& group = index.groups[it->second];
    if (group.members.size() >= 2)
      throw InvalidArgument("pair_twins: twin_group '" + group.group + "' has more than 2 members");
    group.members.push_back(i);
  }
  return index;
}

}  // namespace debias
