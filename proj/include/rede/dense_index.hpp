#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "rede/types.hpp"

namespace rede {

enum class Similarity { InnerProduct, Cosine };

Similarity parse_similarity(std::string_view name);

/// Precomputed corpus embeddings with exact search and per-document lookup.
///
/// On disk: a raw little-endian float32 row-major vectors file, a JSON
/// manifest {"dim", "count", "id_file"} and a newline-separated id file whose
/// path is relative to the manifest.
class DenseIndex {
 public:
  DenseIndex() = default;

  /// Throws SizeMismatch, NonFiniteVector or DuplicateDocId.
  DenseIndex(std::vector<std::string> ids, RowMatrix vectors);

  static DenseIndex ingest(const std::filesystem::path& vectors_path,
                           const std::filesystem::path& manifest_path);

  /// Writes the three files; `id_file` is placed next to the manifest.
  void save(const std::filesystem::path& vectors_path,
            const std::filesystem::path& manifest_path,
            const std::string& id_file_name) const;

  Eigen::Index dim() const { return vectors_.cols(); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrix& vectors() const { return vectors_; }
  bool contains(std::string_view doc_id) const;

  /// View of the stored row. Throws UnknownDocId.
  Eigen::Map<const Vector> fetch(std::string_view doc_id) const;

  /// Exact top-k by similarity, ties by ascending doc_id.
  /// Throws DimMismatch.
  RankedList search(const Vector& query, std::size_t k,
                    Similarity similarity = Similarity::InnerProduct) const;

 private:
  std::vector<std::string> ids_;
  RowMatrix vectors_;
  std::unordered_map<std::string, Eigen::Index> id_to_row_;
};

}  // namespace rede
