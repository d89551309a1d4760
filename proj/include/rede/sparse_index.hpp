#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rede/corpus_io.hpp"
#include "rede/types.hpp"

namespace rede {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
  std::uint32_t doc = 0;  // row into SparseIndex::doc_ids()
  std::uint32_t tf = 0;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// BM25 inverted index over Document::contents().
///
/// Scoring is the Robertson form with a (k1 + 1) numerator and
/// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
class SparseIndex {
 public:
  /// Throws EmptyCorpus when no document produces a token.
  static SparseIndex build(const Corpus& corpus, Bm25Params params = {});

  /// Binary layout (little-endian):
  ///   magic "RDBM25\0\0", u32 version = 1, f64 k1, f64 b,
  ///   u32 doc_count, then per doc: u32 id_len, id bytes, u32 length;
  ///   u32 term_count, then per term (sorted): u32 len, bytes, u32 n,
  ///   n x (u32 doc_row, u32 tf).
  void save(const std::filesystem::path& path) const;
  static SparseIndex load(const std::filesystem::path& path);

  /// Sum over query tokens (repeats counted) of the per-term BM25 weight.
  /// Throws UnknownDocId.
  double score(std::span<const std::string> query_tokens,
               std::string_view doc_id) const;

  /// Top-k docs with positive score, ties by ascending doc_id.
  RankedList search(std::string_view query_text, std::size_t k) const;
  RankedList search_tokens(std::span<const std::string> query_tokens,
                           std::size_t k) const;

  double idf(std::string_view term) const;

  const Bm25Params& params() const { return params_; }
  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::uint32_t doc_length(std::string_view doc_id) const;
  const std::vector<Posting>* postings(std::string_view term) const;

  friend bool operator==(const SparseIndex&, const SparseIndex&) = default;

 private:
  double term_weight(double idf, std::uint32_t tf, std::uint32_t dl) const;
  std::uint32_t row_of(std::string_view doc_id) const;

  Bm25Params params_;
  std::vector<std::string> doc_ids_;  // ascending
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace rede
