#pragma once

#include <span>

#include <Eigen/Core>

#include "rede/error.hpp"
#include "rede/types.hpp"

namespace rede {

/// (query + sum(vectors)) / (vectors.size() + 1), accumulated in double and
/// rounded once. `empty_code` is raised for an empty list.
template <typename Scalar, typename VectorLike>
VectorX<Scalar> centroid_with_query(const VectorX<Scalar>& query,
                                    std::span<const VectorLike> vectors,
                                    ErrorCode empty_code) {
  if (vectors.empty()) {
    throw Error(empty_code, "no feedback vectors to average with the query");
  }
  Eigen::VectorXd sum = query.template cast<double>();
  for (const auto& v : vectors) {
    if (v.size() != query.size()) {
      throw Error(ErrorCode::DimMismatch,
                  "feedback vector dim " + std::to_string(v.size()) +
                      " != query dim " + std::to_string(query.size()));
    }
    sum += v.template cast<double>();
  }
  sum /= static_cast<double>(vectors.size() + 1);
  return sum.template cast<Scalar>();
}

/// Query refined with real relevant-document embeddings.
template <typename Scalar, typename VectorLike>
VectorX<Scalar> rede_update(const VectorX<Scalar>& query,
                            std::span<const VectorLike> relevant) {
  return centroid_with_query(query, relevant, ErrorCode::EmptyRelevantSet);
}

/// Query refined with embeddings of generated hypothetical documents.
template <typename Scalar, typename VectorLike>
VectorX<Scalar> hyde_update(const VectorX<Scalar>& query,
                            std::span<const VectorLike> hypothetical) {
  return centroid_with_query(query, hypothetical,
                             ErrorCode::EmptyHypotheticalSet);
}

/// Average-PRF baseline: every top-k candidate counts as relevant.
template <typename Scalar, typename VectorLike>
VectorX<Scalar> avg_prf_update(const VectorX<Scalar>& query,
                               std::span<const VectorLike> topk) {
  return rede_update(query, topk);
}

}  // namespace rede
