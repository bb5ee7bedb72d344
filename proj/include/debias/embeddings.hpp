#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "debias/dataset.hpp"

namespace debias {

// Binary layout, all integers little-endian:
//   "AFLT" | u32 version | u64 count | u32 dim
//   count x (u16 byte length, UTF-8 id)
//   count x dim float32, row-major
inline constexpr std::string_view kEmbeddingMagic = "AFLT";
inline constexpr std::uint32_t kEmbeddingVersion = 1;

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Throws InvalidArgument on shape mismatch, zero dim, non-finite values
  // or duplicate ids.
  EmbeddingTable(std::vector<std::string> ids, std::vector<float> values, std::size_t dim);

  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::size_t dim_ = 0;
};

std::vector<unsigned char> encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(std::span<const unsigned char> bytes);

EmbeddingTable read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

// Debug export: header "id,v0,...,v{dim-1}", one row per id.
void write_embeddings_csv(const std::filesystem::path& path, const EmbeddingTable& table);

// Rows of an EmbeddingTable paired with gold labels (1 or 2), sorted by id.
struct LabeledEmbeddings {
  EmbeddingTable table;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  // SHA-256 over ids, labels and float bytes in row order.
  std::string content_hash() const;
  LabeledEmbeddings subset(std::span<const std::size_t> rows) const;
};

LabeledEmbeddings make_labeled(EmbeddingTable table, std::vector<int> labels);

// Restricts to `pool` ids (any order, duplicates ignored), rows ascending by
// id. Throws InvalidArgument listing every pool id absent from the table or
// the dataset.
LabeledEmbeddings align(const EmbeddingTable& table, const Dataset& dataset,
                        std::span<const std::string> pool);

}  // namespace debias
