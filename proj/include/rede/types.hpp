#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace rede {

/// A retrievable unit of the corpus.
struct Document {
  std::string doc_id;
  std::string title;
  std::string text;

  /// The single text view used downstream (BM25, judge, HyDE context):
  /// "title. text" when a title exists, otherwise the body.
  std::string contents() const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Query {
  std::string query_id;
  std::string text;

  friend bool operator==(const Query&, const Query&) = default;
};

using QuerySet = std::vector<Query>;

/// doc_id -> graded relevance for one query.
using QueryQrels = std::map<std::string, int>;
/// query_id -> judgments.
using Qrels = std::unordered_map<std::string, QueryQrels>;

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Ordered retrieval output. Scores are non-increasing and doc ids distinct.
struct RankedList {
  std::string query_id;
  std::vector<ScoredDoc> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// True when `list` satisfies the ranked-list invariants.
bool is_well_formed(const RankedList& list);

/// Throws PreconditionViolation when `list` is not well formed.
void require_well_formed(const RankedList& list);

/// Orders entries by descending score, ascending doc_id on ties.
void sort_ranked(std::vector<ScoredDoc>& entries);

using Vector = Eigen::VectorXf;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace rede
