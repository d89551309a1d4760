#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rede/types.hpp"

namespace rede {

enum class RecordFormat { Jsonl, Tsv };

RecordFormat parse_record_format(std::string_view name);

/// Immutable doc_id -> Document store. Iteration order is ascending doc_id,
/// so anything built from a corpus is independent of the input line order.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  bool contains(std::string_view doc_id) const;

  /// Throws UnknownDocId.
  const Document& at(std::string_view doc_id) const;

  const std::map<std::string, Document, std::less<>>& documents() const {
    return docs_;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::map<std::string, Document, std::less<>> docs_;
};

/// BEIR-style JSONL ({"_id","title","text"}) or TSV (id, text) / (id, title,
/// text). Blank lines are skipped.
Corpus load_corpus(const std::filesystem::path& path, RecordFormat format);
Corpus parse_corpus(std::istream& in, RecordFormat format);

/// JSONL ({"_id","text"}) or two-column TSV, in file order.
QuerySet load_queries(const std::filesystem::path& path, RecordFormat format);
QuerySet parse_queries(std::istream& in, RecordFormat format);

/// TREC qrels: "qid iter docid rel"; the iter column is ignored.
Qrels load_qrels(const std::filesystem::path& path);
Qrels parse_qrels(std::istream& in);

/// TREC run: "qid Q0 docid rank score tag", ranks from 1, 6-decimal scores.
void write_run_file(const std::filesystem::path& path,
                    std::span<const RankedList> runs, std::string_view tag);
void write_run(std::ostream& out, std::span<const RankedList> runs,
               std::string_view tag);

/// Reads a run file back, one RankedList per query in first-seen order,
/// entries in rank order.
std::vector<RankedList> load_run_file(const std::filesystem::path& path);
std::vector<RankedList> parse_run(std::istream& in);

/// Lowercased alphanumeric tokens. ASCII letters and digits are word
/// characters; non-ASCII code points are word characters unless they fall in
/// a Unicode space or punctuation block. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

/// First `max_tokens` whitespace-delimited tokens joined by single spaces.
std::string truncate_whitespace_tokens(std::string_view text,
                                       std::size_t max_tokens);

}  // namespace rede
