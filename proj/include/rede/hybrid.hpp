#pragma once

#include <string_view>

#include "rede/dense_index.hpp"
#include "rede/encoder.hpp"
#include "rede/sparse_index.hpp"
#include "rede/types.hpp"

namespace rede {

struct FusionConfig {
  double alpha = 0.5;          // weight of the sparse leg
  std::size_t pool_depth = 0;  // per-leg candidates; 0 means max(k, 100)

  std::size_t effective_pool(std::size_t k) const;
  void validate() const;
};

/// Min-max normalization to [0, 1]; a constant list maps to 1.0.
RankedList normalize_scores(RankedList list);

/// Fuses two already-retrieved legs. Candidates missing from a leg get 0 on
/// that leg after normalization.
RankedList fuse_rankings(const RankedList& sparse, const RankedList& dense,
                         std::size_t k, double alpha);

/// alpha * sparse_norm + (1 - alpha) * dense_norm over the union of the top
/// pool_depth of each leg; returns the top k, ties by ascending doc_id.
RankedList hybrid_search(const SparseIndex& sparse, const DenseIndex& dense,
                         std::string_view query_text, const Vector& query_vec,
                         std::size_t k, const FusionConfig& config,
                         Similarity similarity = Similarity::InnerProduct);

RankedList hybrid_search(const SparseIndex& sparse, const DenseIndex& dense,
                         const EncoderBackend& encoder, const Query& query,
                         std::size_t k, const FusionConfig& config,
                         Similarity similarity = Similarity::InnerProduct);

}  // namespace rede
