#include "rede/dense_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rede/error.hpp"

namespace rede {

static_assert(std::endian::native == std::endian::little,
              "embedding files are little-endian float32");

Similarity parse_similarity(std::string_view name) {
  if (name == "ip" || name == "inner_product") return Similarity::InnerProduct;
  if (name == "cosine") return Similarity::Cosine;
  throw Error(ErrorCode::InvalidConfig,
              "unknown similarity '" + std::string(name) + "'");
}

DenseIndex::DenseIndex(std::vector<std::string> ids, RowMatrix vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
    throw Error(ErrorCode::SizeMismatch,
                std::to_string(ids_.size()) + " ids for " +
                    std::to_string(vectors_.rows()) + " vectors");
  }
  if (vectors_.cols() < 1) {
    throw Error(ErrorCode::SizeMismatch, "embedding dim must be >= 1");
  }
  for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
    if (!vectors_.row(r).allFinite()) {
      throw Error(ErrorCode::NonFiniteVector,
                  "row " + std::to_string(r) + " (" + ids_[r] + ")");
    }
    if (!id_to_row_.emplace(ids_[r], r).second) {
      throw Error(ErrorCode::DuplicateDocId, ids_[r]);
    }
  }
}

DenseIndex DenseIndex::ingest(const std::filesystem::path& vectors_path,
                              const std::filesystem::path& manifest_path) {
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) {
    throw Error(ErrorCode::IoError,
                "cannot open manifest '" + manifest_path.string() + "'");
  }
  const auto manifest =
      nlohmann::json::parse(manifest_in, nullptr, /*allow_exceptions=*/false);
  if (manifest.is_discarded() || !manifest.is_object() ||
      !manifest.contains("dim") || !manifest.contains("count") ||
      !manifest.contains("id_file") || !manifest["dim"].is_number_unsigned() ||
      !manifest["count"].is_number_unsigned() ||
      !manifest["id_file"].is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                "manifest '" + manifest_path.string() +
                    "' needs unsigned \"dim\", \"count\" and string \"id_file\"");
  }
  const auto dim = manifest["dim"].get<std::uint64_t>();
  const auto count = manifest["count"].get<std::uint64_t>();
  if (dim == 0) throw Error(ErrorCode::SizeMismatch, "manifest dim is 0");

  std::filesystem::path id_path = manifest["id_file"].get<std::string>();
  if (id_path.is_relative()) id_path = manifest_path.parent_path() / id_path;
  std::ifstream id_in(id_path);
  if (!id_in) {
    throw Error(ErrorCode::IoError,
                "cannot open id file '" + id_path.string() + "'");
  }
  std::vector<std::string> ids;
  for (std::string line; std::getline(id_in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ids.push_back(std::move(line));
  }
  if (ids.size() != count) {
    throw Error(ErrorCode::SizeMismatch,
                "id file has " + std::to_string(ids.size()) +
                    " ids, manifest count is " + std::to_string(count));
  }

  std::error_code ec;
  const auto bytes = std::filesystem::file_size(vectors_path, ec);
  if (ec) {
    throw Error(ErrorCode::IoError,
                "cannot stat vectors file '" + vectors_path.string() + "'");
  }
  const auto expected = count * dim * sizeof(float);
  if (bytes != expected) {
    throw Error(ErrorCode::SizeMismatch,
                "vectors file is " + std::to_string(bytes) + " bytes, expected " +
                    std::to_string(expected));
  }
  RowMatrix vectors(static_cast<Eigen::Index>(count),
                    static_cast<Eigen::Index>(dim));
  std::ifstream vin(vectors_path, std::ios::binary);
  if (!vin || (expected > 0 &&
               !vin.read(reinterpret_cast<char*>(vectors.data()),
                         static_cast<std::streamsize>(expected)))) {
    throw Error(ErrorCode::IoError,
                "cannot read vectors file '" + vectors_path.string() + "'");
  }
  return DenseIndex(std::move(ids), std::move(vectors));
}

void DenseIndex::save(const std::filesystem::path& vectors_path,
                      const std::filesystem::path& manifest_path,
                      const std::string& id_file_name) const {
  std::ofstream vout(vectors_path, std::ios::binary | std::ios::trunc);
  if (!vout) {
    throw Error(ErrorCode::IoError,
                "cannot write '" + vectors_path.string() + "'");
  }
  vout.write(reinterpret_cast<const char*>(vectors_.data()),
             static_cast<std::streamsize>(vectors_.size() * sizeof(float)));
  const auto id_path = manifest_path.parent_path() / id_file_name;
  std::ofstream iout(id_path, std::ios::trunc);
  for (const auto& id : ids_) iout << id << '\n';
  nlohmann::json manifest = {{"dim", static_cast<std::uint64_t>(dim())},
                             {"count", ids_.size()},
                             {"id_file", id_file_name}};
  std::ofstream mout(manifest_path, std::ios::trunc);
  mout << manifest.dump(2) << '\n';
  if (!vout.flush() || !iout.flush() || !mout.flush()) {
    throw Error(ErrorCode::IoError, "failed writing dense index files");
  }
}

bool DenseIndex::contains(std::string_view doc_id) const {
  return id_to_row_.find(std::string(doc_id)) != id_to_row_.end();
}

Eigen::Map<const Vector> DenseIndex::fetch(std::string_view doc_id) const {
  auto it = id_to_row_.find(std::string(doc_id));
  if (it == id_to_row_.end()) {
    throw Error(ErrorCode::UnknownDocId, std::string(doc_id));
  }
  return Eigen::Map<const Vector>(vectors_.row(it->second).data(), dim());
}

RankedList DenseIndex::search(const Vector& query, std::size_t k,
                              Similarity similarity) const {
  if (query.size() != dim()) {
    throw Error(ErrorCode::DimMismatch,
                "query dim " + std::to_string(query.size()) + " != index dim " +
                    std::to_string(dim()));
  }
  if (k == 0) {
    throw Error(ErrorCode::PreconditionViolation, "search depth must be >= 1");
  }
  const auto n = static_cast<Eigen::Index>(ids_.size());
  std::vector<float> scores(ids_.size());
  const float qnorm = query.norm();
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Map<const Vector> row(vectors_.row(r).data(), dim());
    float s = row.dot(query);
    if (similarity == Similarity::Cosine) {
      const float denom = row.norm() * qnorm;
      s = denom > 0.0f ? s / denom : 0.0f;
    }
    scores[r] = s;
  }
  std::vector<Eigen::Index> order(ids_.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto better = [&](Eigen::Index a, Eigen::Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids_[a] < ids_[b];
  };
  const auto take = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);
  RankedList out;
  out.entries.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.entries.push_back({ids_[order[i]], static_cast<double>(scores[order[i]])});
  }
  return out;
}

}  // namespace rede
