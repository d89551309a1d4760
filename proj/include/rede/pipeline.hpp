#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rede/corpus_io.hpp"
#include "rede/dense_index.hpp"
#include "rede/encoder.hpp"
#include "rede/hybrid.hpp"
#include "rede/hyde.hpp"
#include "rede/llm_gateway.hpp"
#include "rede/relevance_judge.hpp"
#include "rede/sparse_index.hpp"
#include "rede/types.hpp"

namespace rede {

enum class Method {
  Bm25,
  Dense,
  Hybrid,
  AvgPrf,
  Hyde,
  HydePrf,
  Rede,             // empty relevant set handled by PipelineConfig::default_policy
  RedeHydeDefault,  // Rede with the hyde_prf default forced
  Rerank,           // initial candidates reordered by judge probability
};

enum class InitialRetriever { Sparse, Dense, Hybrid };
enum class DefaultPolicy { EncoderOnly, HydePrf, None };
enum class PathTaken { Baseline, Rede, DefaultEncoder, DefaultHydePrf, None };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
InitialRetriever parse_initial_retriever(std::string_view name);
std::string_view to_string(InitialRetriever retriever);
DefaultPolicy parse_default_policy(std::string_view name);
std::string_view to_string(DefaultPolicy policy);
std::string_view to_string(PathTaken path);

struct PipelineConfig {
  InitialRetriever initial_retriever = InitialRetriever::Hybrid;
  std::size_t k_initial = 20;
  std::optional<std::size_t> max_kstar;  // unset = k_initial
  DefaultPolicy default_policy = DefaultPolicy::EncoderOnly;
  std::size_t output_depth = 1000;
  Similarity similarity = Similarity::InnerProduct;
  int judge_parallelism = 1;

  std::size_t effective_max_kstar() const {
    return max_kstar.value_or(k_initial);
  }
  void validate() const;
};

struct StageTimes {
  double encode_ms = 0;
  double initial_ms = 0;
  double judge_ms = 0;
  double generation_ms = 0;
  double search_ms = 0;
  double total_ms = 0;
};

/// Per-query record of what the pipeline did.
struct SearchTrace {
  std::string query_id;
  Method method = Method::Dense;
  RankedList candidates;
  std::vector<RelevanceJudgment> judgments;
  std::vector<std::string> skipped;
  std::vector<std::string> feedback_doc_ids;  // the k* docs averaged in
  std::size_t kstar = 0;
  PathTaken path_taken = PathTaken::Baseline;
  std::uint64_t judge_calls = 0;
  std::uint64_t generation_calls = 0;
  std::size_t context_fetches = 0;  // corpus lookups feeding the generator
  std::vector<std::string> hypothetical_docs;
  Vector query_vector;                  // f(q)
  std::optional<Vector> refined_vector; // what was finally searched, if not f(q)
  StageTimes times;
  std::vector<std::string> warnings;
};

struct SearchResult {
  RankedList ranking;
  SearchTrace trace;
};

/// Top `max_kstar` of an already ordered relevant set.
std::vector<std::string> select_feedback_docs(const RelevantSet& relevant,
                                              std::size_t max_kstar);

/// Candidates by descending judge probability, ties by original rank; scores
/// become p_relevant. Throws MissingJudgment.
RankedList rerank_by_judge(const RankedList& candidates,
                           const std::vector<RelevanceJudgment>& judgments);

struct SearchResources {
  const Corpus& corpus;
  const SparseIndex& sparse;
  const DenseIndex& dense;
  const EncoderBackend& encoder;
  LlmGateway* gateway = nullptr;  // required by hyde* and llm-judged methods
  JudgeBackend* judge = nullptr;  // required by rede* and rerank
};

struct EngineTemplates {
  std::optional<std::string> hyde_plain;
  std::optional<std::string> hyde_context;
};

/// End-to-end retrieval over immutable indices. Distinct queries may be
/// searched concurrently; each call owns its trace.
class SearchEngine {
 public:
  SearchEngine(SearchResources resources, PipelineConfig pipeline,
               FusionConfig fusion = {}, HydeConfig hyde = {},
               EngineTemplates templates = {});

  SearchResult search(Method method, const Query& query) const;

  SearchResult rede_rf_search(const Query& query,
                              DefaultPolicy policy) const;
  SearchResult hyde_search(const Query& query, bool with_context) const;
  SearchResult avg_prf_search(const Query& query) const;
  SearchResult rerank_search(const Query& query) const;

  /// The first-stage candidate list for `query` under `retriever`.
  RankedList initial_retrieval(const Query& query, const Vector& query_vec,
                               std::size_t k) const;

  const PipelineConfig& pipeline_config() const { return pipeline_; }
  const HydeConfig& hyde_config() const { return hyde_; }
  const SearchResources& resources() const { return res_; }

 private:
  Vector encode_query(const Query& query, SearchTrace& trace) const;
  void initial_stage(const Query& query, SearchTrace& trace) const;
  Vector generate_and_update(const Query& query, bool with_context,
                             SearchTrace& trace) const;
  RankedList final_search(const Vector& v, SearchTrace& trace) const;
  JudgeBackend& judge() const;
  LlmGateway& gateway() const;

  SearchResources res_;
  PipelineConfig pipeline_;
  FusionConfig fusion_;
  HydeConfig hyde_;
  EngineTemplates templates_;
};

}  // namespace rede
