#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "rede/corpus_io.hpp"
#include "rede/dense_index.hpp"
#include "rede/encoder.hpp"
#include "rede/pipeline.hpp"
#include "rede/sparse_index.hpp"

namespace rede::test {

/// Exact text -> vector table. Unknown text throws PreconditionViolation.
class LookupEncoder final : public EncoderBackend {
 public:
  LookupEncoder(Eigen::Index dim, std::map<std::string, Vector> table)
      : dim_(dim), table_(std::move(table)) {}

  std::vector<Vector> encode(std::span<const std::string> texts) const override;
  Eigen::Index dim() const override { return dim_; }
  void set(const std::string& text, Vector v) { table_[text] = std::move(v); }

 private:
  Eigen::Index dim_;
  std::map<std::string, Vector> table_;
};

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Owns everything a SearchEngine borrows.
struct Fixture {
  Corpus corpus;
  SparseIndex sparse;
  DenseIndex dense;
  std::unique_ptr<EncoderBackend> encoder;
  QuerySet queries;
  Qrels qrels;

  SearchResources resources(LlmGateway* gateway = nullptr,
                            JudgeBackend* judge = nullptr) const {
    return {corpus, sparse, dense, *encoder, gateway, judge};
  }
};

/// Corpus embedded with the hashing encoder; queries are encoded the same way.
Fixture hashed_fixture(std::vector<Document> docs, QuerySet queries, Eigen::Index dim = 64,
                       Qrels qrels = {});

struct BenchmarkShape {
  int clusters = 5;
  Eigen::Index dim = 16;
  int docs = 200;
  int queries = 20;
};

/// Gaussian topic clusters. Each doc and query belongs to one cluster; doc
/// text mixes cluster words with shared filler, embeddings are the cluster
/// centre plus noise. Qrels mark every doc of the query's cluster relevant
/// (grade 1). Query embeddings are noisier than doc embeddings so feedback
/// from true cluster members has room to help.
Fixture synthetic_benchmark(std::uint64_t seed, BenchmarkShape shape = {});

/// Random documents over a small vocabulary, for index oracles.
std::vector<Document> random_documents(std::mt19937_64& rng, int n_docs, int vocab,
                                       int max_len);

/// Exhaustive inner-product ranking in double precision, ties by doc_id.
std::vector<std::string> brute_force_ranking(const DenseIndex& index,
                                             const Eigen::VectorXd& query);

std::vector<std::string> ids_of(const RankedList& list);

}  // namespace rede::test
