#include "debias/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "debias/error.hpp"
#include "debias/hash.hpp"

namespace debias {
namespace {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(u >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::make_unsigned_t<T>>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::span<const unsigned char> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n)
      throw FormatError(std::string("embeddings: truncated while reading ") + what);
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

void check_finite(std::span<const float> values, std::size_t dim) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw FormatError("embeddings: non-finite value at row " + std::to_string(i / dim) +
                        ", column " + std::to_string(i % dim));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids, std::vector<float> values,
                               std::size_t dim)
    : ids_(std::move(ids)), values_(std::move(values)), dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("embeddings: dim must be positive");
  if (values_.size() != ids_.size() * dim_)
    throw InvalidArgument("embeddings: " + std::to_string(values_.size()) +
                          " values do not match " + std::to_string(ids_.size()) + " rows x " +
                          std::to_string(dim_));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw InvalidArgument("embeddings: non-finite value at row " + std::to_string(i / dim_) +
                            ", column " + std::to_string(i % dim_));
  std::unordered_set<std::string_view> seen;
  for (const auto& id : ids_)
    if (!seen.insert(id).second) throw InvalidArgument("embeddings: duplicate id '" + id + "'");
}

std::vector<unsigned char> encode_embeddings(const EmbeddingTable& table) {
  std::vector<unsigned char> out;
  out.reserve(20 + table.rows() * (2 + 16) + table.values().size() * 4);
  out.insert(out.end(), kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  put_le<std::uint32_t>(out, kEmbeddingVersion);
  put_le<std::uint64_t>(out, table.rows());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim()));
  for (const auto& id : table.ids()) {
    if (id.size() > 0xffff) throw InvalidArgument("embeddings: id longer than 65535 bytes");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  for (float v : table.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingTable decode_embeddings(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kEmbeddingMagic.begin()))
    throw FormatError("embeddings: bad magic (expected \"AFLT\")");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kEmbeddingVersion)
    throw FormatError("embeddings: unsupported format version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>("count");
  const auto dim = r.get<std::uint32_t>("dim");
  if (dim == 0) throw FormatError("embeddings: dim must be positive");

  std::vector<std::string> ids;
  // Each id needs at least its 2-byte length prefix.
  if (count > r.remaining() / 2)
    throw FormatError("embeddings: count " + std::to_string(count) +
                      " does not match payload length");
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("id length");
    auto raw = r.take(len, "id bytes");
    ids.emplace_back(reinterpret_cast<const char*>(raw.data()), raw.size());
  }
  const std::uint64_t expected = count * dim * 4;
  if (r.remaining() != expected)
    throw FormatError("embeddings: payload length mismatch (count=" + std::to_string(count) +
                      ", dim=" + std::to_string(dim) + " needs " + std::to_string(expected) +
                      " bytes, found " + std::to_string(r.remaining()) + ")");
  std::vector<float> values(count * dim);
  for (auto& v : values) v = std::bit_cast<float>(r.get<std::uint32_t>("payload"));
  check_finite(values, dim);
  try {
    return EmbeddingTable(std::move(ids), std::move(values), dim);
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embeddings " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return decode_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  const auto bytes = encode_embeddings(table);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "id";
  for (std::size_t c = 0; c < table.dim(); ++c) out << ",v" << c;
  out << '\n';
  out.precision(9);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.ids()[r];
    for (float v : table.row(r)) out << ',' << v;
    out << '\n';
  }
}

std::string LabeledEmbeddings::content_hash() const {
  std::vector<unsigned char> buf;
  buf.reserve(table.values().size() * 4 + size() * 16);
  put_le<std::uint64_t>(buf, table.rows());
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(table.dim()));
  for (std::size_t r = 0; r < size(); ++r) {
    const auto& id = table.ids()[r];
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(id.size()));
    buf.insert(buf.end(), id.begin(), id.end());
    buf.push_back(static_cast<unsigned char>(labels[r]));
  }
  for (float v : table.values()) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
  return sha256_hex(buf);
}

LabeledEmbeddings LabeledEmbeddings::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<float> values;
  std::vector<int> out_labels;
  ids.reserve(rows.size());
  values.reserve(rows.size() * table.dim());
  out_labels.reserve(rows.size());
  for (auto r : rows) {
    ids.push_back(table.ids()[r]);
    auto row = table.row(r);
    values.insert(values.end(), row.begin(), row.end());
    out_labels.push_back(labels[r]);
  }
  return {EmbeddingTable(std::move(ids), std::move(values), table.dim()), std::move(out_labels)};
}

LabeledEmbeddings make_labeled(EmbeddingTable table, std::vector<int> labels) {
  if (labels.size() != table.rows())
    throw InvalidArgument("labeled embeddings: " + std::to_string(labels.size()) +
                          " labels for " + std::to_string(table.rows()) + " rows");
  for (int l : labels)
    if (l != 1 && l != 2) throw InvalidArgument("labeled embeddings: label outside {1,2}");
  return {std::move(table), std::move(labels)};
}

LabeledEmbeddings align(const EmbeddingTable& table, const Dataset& dataset,
                        std::span<const std::string> pool) {
  std::vector<std::string> wanted(pool.begin(), pool.end());
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  std::unordered_map<std::string_view, std::size_t> table_rows;
  for (std::size_t r = 0; r < table.rows(); ++r) table_rows.emplace(table.ids()[r], r);
  const auto ds_index = dataset.index();

  std::vector<std::string> missing_table, missing_dataset;
  for (const auto& id : wanted) {
    if (!table_rows.contains(id)) missing_table.push_back(id);
    if (!ds_index.contains(id)) missing_dataset.push_back(id);
  }
  if (!missing_table.empty() || !missing_dataset.empty()) {
    std::ostringstream msg;
    msg << "align: pool ids missing";
    const auto list = [&msg](const char* where, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg << "; from " << where << " (" << ids.size() << "):";
      for (const auto& id : ids) msg << ' ' << id;
    };
    list("embeddings", missing_table);
    list("dataset", missing_dataset);
    throw InvalidArgument(msg.str());
  }

  std::vector<std::string> ids;
  std::vector<float> values;
  std::vector<int> labels;
  ids.reserve(wanted.size());
  values.reserve(wanted.size() * table.dim());
  labels.reserve(wanted.size());
  for (const auto& id : wanted) {
    auto row = table.row(table_rows.at(id));
    values.insert(values.end(), row.begin(), row.end());
    labels.push_back(dataset.instances[ds_index.find(id)->second].label);
    ids.push_back(id);
  }
  if (ids.empty()) return {EmbeddingTable({}, {}, table.dim() == 0 ? 1 : table.dim()), {}};
  return {EmbeddingTable(std::move(ids), std::move(values), table.dim()), std::move(labels)};
}

}  // namespace debias
