#include "rede/hybrid.hpp"

#include <algorithm>
#include <unordered_map>

#include "rede/error.hpp"

namespace rede {

std::size_t FusionConfig::effective_pool(std::size_t k) const {
  return pool_depth > 0 ? pool_depth : std::max<std::size_t>(k, 100);
}

void FusionConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "fusion alpha must lie in [0, 1]");
  }
}

RankedList normalize_scores(RankedList list) {
  if (list.entries.empty()) return list;
  auto [lo, hi] = std::minmax_element(
      list.entries.begin(), list.entries.end(),
      [](const ScoredDoc& a, const ScoredDoc& b) { return a.score < b.score; });
  const double min = lo->score;
  const double range = hi->score - min;
  for (auto& e : list.entries) {
    e.score = range > 0.0 ? (e.score - min) / range : 1.0;
  }
  return list;
}

RankedList fuse_rankings(const RankedList& sparse, const RankedList& dense,
                         std::size_t k, double alpha) {
  struct Legs {
    double sparse = 0.0;
    double dense = 0.0;
  };
  std::unordered_map<std::string, Legs> pool;
  for (const auto& e : normalize_scores(sparse).entries) pool[e.doc_id].sparse = e.score;
  for (const auto& e : normalize_scores(dense).entries) pool[e.doc_id].dense = e.score;

  RankedList out;
  out.query_id = sparse.query_id.empty() ? dense.query_id : sparse.query_id;
  out.entries.reserve(pool.size());
  for (const auto& [id, legs] : pool) {
    out.entries.push_back({id, alpha * legs.sparse + (1.0 - alpha) * legs.dense});
  }
  sort_ranked(out.entries);
  if (out.entries.size() > k) out.entries.resize(k);
  return out;
}

RankedList hybrid_search(const SparseIndex& sparse, const DenseIndex& dense,
                         std::string_view query_text, const Vector& query_vec,
                         std::size_t k, const FusionConfig& config,
                         Similarity similarity) {
  config.validate();
  if (k == 0) {
    throw Error(ErrorCode::PreconditionViolation, "search depth must be >= 1");
  }
  const auto pool = config.effective_pool(k);
  const auto sparse_leg = sparse.search(query_text, pool);
  const auto dense_leg = dense.search(query_vec, pool, similarity);
  return fuse_rankings(sparse_leg, dense_leg, k, config.alpha);
}

RankedList hybrid_search(const SparseIndex& sparse, const DenseIndex& dense,
                         const EncoderBackend& encoder, const Query& query,
                         std::size_t k, const FusionConfig& config,
                         Similarity similarity) {
  auto out = hybrid_search(sparse, dense, query.text, encoder.encode_one(query.text),
                           k, config, similarity);
  out.query_id = query.query_id;
  return out;
}

}  // namespace rede
