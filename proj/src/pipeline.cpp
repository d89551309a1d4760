#include "rede/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "rede/error.hpp"
#include "rede/query_update.hpp"

namespace rede {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename E>
E parse_enum(std::string_view name,
             std::initializer_list<std::pair<std::string_view, E>> table,
             std::string_view what) {
  for (const auto& [key, value] : table) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::InvalidConfig,
              "unknown " + std::string(what) + " '" + std::string(name) + "'");
}

}  // namespace

Method parse_method(std::string_view name) {
  return parse_enum<Method>(name,
                            {{"bm25", Method::Bm25},
                             {"dense", Method::Dense},
                             {"hybrid", Method::Hybrid},
                             {"avgprf", Method::AvgPrf},
                             {"hyde", Method::Hyde},
                             {"hyde-prf", Method::HydePrf},
                             {"rede", Method::Rede},
                             {"rede-hyde-default", Method::RedeHydeDefault},
                             {"rerank", Method::Rerank}},
                            "method");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Bm25: return "bm25";
    case Method::Dense: return "dense";
    case Method::Hybrid: return "hybrid";
    case Method::AvgPrf: return "avgprf";
    case Method::Hyde: return "hyde";
    case Method::HydePrf: return "hyde-prf";
    case Method::Rede: return "rede";
    case Method::RedeHydeDefault: return "rede-hyde-default";
    case Method::Rerank: return "rerank";
  }
  return "?";
}

InitialRetriever parse_initial_retriever(std::string_view name) {
  return parse_enum<InitialRetriever>(name,
                                      {{"sparse", InitialRetriever::Sparse},
                                       {"dense", InitialRetriever::Dense},
                                       {"hybrid", InitialRetriever::Hybrid}},
                                      "initial retriever");
}

std::string_view to_string(InitialRetriever retriever) {
  switch (retriever) {
    case InitialRetriever::Sparse: return "sparse";
    case InitialRetriever::Dense: return "dense";
    case InitialRetriever::Hybrid: return "hybrid";
  }
  return "?";
}

DefaultPolicy parse_default_policy(std::string_view name) {
  return parse_enum<DefaultPolicy>(name,
                                   {{"encoder_only", DefaultPolicy::EncoderOnly},
                                    {"hyde_prf", DefaultPolicy::HydePrf},
                                    {"none", DefaultPolicy::None}},
                                   "default policy");
}

std::string_view to_string(DefaultPolicy policy) {
  switch (policy) {
    case DefaultPolicy::EncoderOnly: return "encoder_only";
    case DefaultPolicy::HydePrf: return "hyde_prf";
    case DefaultPolicy::None: return "none";
  }
  return "?";
}

std::string_view to_string(PathTaken path) {
  switch (path) {
    case PathTaken::Baseline: return "baseline";
    case PathTaken::Rede: return "rede";
    case PathTaken::DefaultEncoder: return "default_encoder";
    case PathTaken::DefaultHydePrf: return "default_hyde_prf";
    case PathTaken::None: return "none";
  }
  return "?";
}

void PipelineConfig::validate() const {
  if (k_initial < 1) throw Error(ErrorCode::InvalidConfig, "k_initial must be >= 1");
  const auto cap = effective_max_kstar();
  if (cap < 1 || cap > k_initial) {
    throw Error(ErrorCode::InvalidConfig, "max_kstar must lie in [1, k_initial]");
  }
  if (output_depth < 1) {
    throw Error(ErrorCode::InvalidConfig, "output_depth must be >= 1");
  }
  if (judge_parallelism < 1) {
    throw Error(ErrorCode::InvalidConfig, "judge_parallelism must be >= 1");
  }
}

std::vector<std::string> select_feedback_docs(const RelevantSet& relevant,
                                              std::size_t max_kstar) {
  std::vector<std::string> out;
  const auto n = std::min(max_kstar, relevant.docs.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(relevant.docs[i].doc_id);
  return out;
}

RankedList rerank_by_judge(const RankedList& candidates,
                           const std::vector<RelevanceJudgment>& judgments) {
  std::unordered_map<std::string_view, double> p;
  for (const auto& j : judgments) p.emplace(j.doc_id, j.p_relevant);
  RankedList out{candidates.query_id, {}};
  out.entries.reserve(candidates.size());
  for (const auto& c : candidates.entries) {
    auto it = p.find(c.doc_id);
    if (it == p.end()) throw Error(ErrorCode::MissingJudgment, c.doc_id);
    out.entries.push_back({c.doc_id, it->second});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) {
                     return a.score > b.score;
                   });
  return out;
}

SearchEngine::SearchEngine(SearchResources resources, PipelineConfig pipeline,
                           FusionConfig fusion, HydeConfig hyde,
                           EngineTemplates templates)
    : res_(resources),
      pipeline_(pipeline),
      fusion_(fusion),
      hyde_(hyde),
      templates_(std::move(templates)) {
  pipeline_.validate();
  fusion_.validate();
  hyde_.validate();
}

JudgeBackend& SearchEngine::judge() const {
  if (!res_.judge) {
    throw Error(ErrorCode::InvalidConfig, "this method needs a judge backend");
  }
  return *res_.judge;
}

LlmGateway& SearchEngine::gateway() const {
  if (!res_.gateway) {
    throw Error(ErrorCode::InvalidConfig, "this method needs an LLM gateway");
  }
  return *res_.gateway;
}

Vector SearchEngine::encode_query(const Query& query, SearchTrace& trace) const {
  const auto start = Clock::now();
  Vector v = res_.encoder.encode_one(query.text);
  if (v.size() != res_.dense.dim()) {
    throw Error(ErrorCode::DimMismatch,
                "encoder dim " + std::to_string(v.size()) + " != index dim " +
                    std::to_string(res_.dense.dim()));
  }
  trace.query_vector = v;
  trace.times.encode_ms += ms_since(start);
  return v;
}

RankedList SearchEngine::initial_retrieval(const Query& query,
                                           const Vector& query_vec,
                                           std::size_t k) const {
  RankedList out;
  switch (pipeline_.initial_retriever) {
    case InitialRetriever::Sparse:
      out = res_.sparse.search(query.text, k);
      break;
    case InitialRetriever::Dense:
      out = res_.dense.search(query_vec, k, pipeline_.similarity);
      break;
    case InitialRetriever::Hybrid:
      out = hybrid_search(res_.sparse, res_.dense, query.text, query_vec, k,
                          fusion_, pipeline_.similarity);
      break;
  }
  out.query_id = query.query_id;
  return out;
}

void SearchEngine::initial_stage(const Query& query, SearchTrace& trace) const {
  const auto start = Clock::now();
  trace.candidates = initial_retrieval(query, trace.query_vector, pipeline_.k_initial);
  trace.times.initial_ms += ms_since(start);
}

RankedList SearchEngine::final_search(const Vector& v, SearchTrace& trace) const {
  const auto start = Clock::now();
  auto out = res_.dense.search(v, pipeline_.output_depth, pipeline_.similarity);
  out.query_id = trace.query_id;
  trace.times.search_ms += ms_since(start);
  return out;
}

Vector SearchEngine::generate_and_update(const Query& query, bool with_context,
                                         SearchTrace& trace) const {
  std::vector<std::string> context;
  if (with_context) {
    auto n = trace.candidates.size();
    if (hyde_.context_docs > 0) n = std::min(n, hyde_.context_docs);
    context.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      context.push_back(res_.corpus.at(trace.candidates.entries[i].doc_id).contents());
    }
    trace.context_fetches = n;
  }
  const auto& tmpl = context.empty() ? templates_.hyde_plain : templates_.hyde_context;
  const auto start = Clock::now();
  auto hypo = generate_hypothetical_docs(
      gateway(), hyde_, query.text, context,
      tmpl ? std::optional<std::string_view>(*tmpl) : std::nullopt);
  trace.times.generation_ms += ms_since(start);
  trace.generation_calls += static_cast<std::uint64_t>(hyde_.n_samples + hypo.empty_retries);
  if (hypo.dropped > 0) {
    trace.warnings.push_back(std::to_string(hypo.dropped) +
                             " empty hypothetical documents dropped");
  }

  const auto enc_start = Clock::now();
  const auto vectors = res_.encoder.encode(hypo.texts);
  trace.times.encode_ms += ms_since(enc_start);
  trace.hypothetical_docs = std::move(hypo.texts);
  return hyde_update(trace.query_vector, std::span<const Vector>(vectors));
}

SearchResult SearchEngine::rede_rf_search(const Query& query,
                                          DefaultPolicy policy) const {
  const auto start = Clock::now();
  SearchResult result;
  auto& trace = result.trace;
  trace.query_id = query.query_id;
  trace.method = policy == DefaultPolicy::HydePrf ? Method::RedeHydeDefault : Method::Rede;

  const Vector qvec = encode_query(query, trace);
  initial_stage(query, trace);

  const auto judge_start = Clock::now();
  RelevantSet relevant{query.query_id, {}};
  trace.judge_calls = trace.candidates.size();
  try {
    auto outcome = judge_candidates(judge(), query, trace.candidates, res_.corpus,
                                    pipeline_.judge_parallelism);
    relevant = std::move(outcome.relevant);
    trace.judgments = std::move(outcome.judgments);
    trace.skipped = std::move(outcome.skipped);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::JudgeUnavailable) throw;
    trace.skipped.clear();
    for (const auto& c : trace.candidates.entries) trace.skipped.push_back(c.doc_id);
    trace.warnings.push_back(e.what());
  }
  trace.times.judge_ms += ms_since(judge_start);
  for (const auto& id : trace.skipped) trace.warnings.push_back("SkippedDoc: " + id);

  trace.feedback_doc_ids = select_feedback_docs(relevant, pipeline_.effective_max_kstar());
  trace.kstar = trace.feedback_doc_ids.size();

  if (trace.kstar > 0) {
    std::vector<Eigen::Map<const Vector>> embeddings;
    embeddings.reserve(trace.kstar);
    for (const auto& id : trace.feedback_doc_ids) {
      embeddings.push_back(res_.dense.fetch(id));
    }
    trace.refined_vector =
        rede_update(qvec, std::span<const Eigen::Map<const Vector>>(embeddings));
    trace.path_taken = PathTaken::Rede;
    result.ranking = final_search(*trace.refined_vector, trace);
  } else {
    switch (policy) {
      case DefaultPolicy::EncoderOnly:
        trace.path_taken = PathTaken::DefaultEncoder;
        result.ranking = final_search(qvec, trace);
        break;
      case DefaultPolicy::HydePrf:
        trace.path_taken = PathTaken::DefaultHydePrf;
        trace.refined_vector = generate_and_update(query, /*with_context=*/true, trace);
        result.ranking = final_search(*trace.refined_vector, trace);
        break;
      case DefaultPolicy::None:
        trace.path_taken = PathTaken::None;
        result.ranking = RankedList{query.query_id, {}};
        break;
    }
  }
  trace.times.total_ms = ms_since(start);
  return result;
}

SearchResult SearchEngine::hyde_search(const Query& query, bool with_context) const {
  const auto start = Clock::now();
  SearchResult result;
  auto& trace = result.trace;
  trace.query_id = query.query_id;
  trace.method = with_context ? Method::HydePrf : Method::Hyde;
  encode_query(query, trace);
  if (with_context) initial_stage(query, trace);
  trace.refined_vector = generate_and_update(query, with_context, trace);
  result.ranking = final_search(*trace.refined_vector, trace);
  trace.times.total_ms = ms_since(start);
  return result;
}

SearchResult SearchEngine::avg_prf_search(const Query& query) const {
  const auto start = Clock::now();
  SearchResult result;
  auto& trace = result.trace;
  trace.query_id = query.query_id;
  trace.method = Method::AvgPrf;
  const Vector qvec = encode_query(query, trace);
  initial_stage(query, trace);
  if (trace.candidates.empty()) {
    trace.warnings.push_back("no initial candidates; searching with f(q)");
    result.ranking = final_search(qvec, trace);
  } else {
    std::vector<Eigen::Map<const Vector>> embeddings;
    embeddings.reserve(trace.candidates.size());
    for (const auto& c : trace.candidates.entries) {
      embeddings.push_back(res_.dense.fetch(c.doc_id));
      trace.feedback_doc_ids.push_back(c.doc_id);
    }
    trace.refined_vector =
        avg_prf_update(qvec, std::span<const Eigen::Map<const Vector>>(embeddings));
    result.ranking = final_search(*trace.refined_vector, trace);
  }
  trace.times.total_ms = ms_since(start);
  return result;
}

SearchResult SearchEngine::rerank_search(const Query& query) const {
  const auto start = Clock::now();
  SearchResult result;
  auto& trace = result.trace;
  trace.query_id = query.query_id;
  trace.method = Method::Rerank;
  encode_query(query, trace);
  initial_stage(query, trace);
  const auto judge_start = Clock::now();
  trace.judge_calls = trace.candidates.size();
  auto outcome = judge_candidates(judge(), query, trace.candidates, res_.corpus,
                                  pipeline_.judge_parallelism);
  trace.judgments = std::move(outcome.judgments);
  trace.skipped = std::move(outcome.skipped);
  trace.times.judge_ms += ms_since(judge_start);
  result.ranking = rerank_by_judge(trace.candidates, trace.judgments);
  trace.times.total_ms = ms_since(start);
  return result;
}

SearchResult SearchEngine::search(Method method, const Query& query) const {
  switch (method) {
    case Method::Bm25: {
      const auto start = Clock::now();
      SearchResult result;
      result.trace.query_id = query.query_id;
      result.trace.method = method;
      result.ranking = res_.sparse.search(query.text, pipeline_.output_depth);
      result.ranking.query_id = query.query_id;
      result.trace.times.total_ms = ms_since(start);
      return result;
    }
    case Method::Dense: {
      const auto start = Clock::now();
      SearchResult result;
      result.trace.query_id = query.query_id;
      result.trace.method = method;
      const Vector qvec = encode_query(query, result.trace);
      result.ranking = final_search(qvec, result.trace);
      result.trace.times.total_ms = ms_since(start);
      return result;
    }
    case Method::Hybrid: {
      const auto start = Clock::now();
      SearchResult result;
      result.trace.query_id = query.query_id;
      result.trace.method = method;
      const Vector qvec = encode_query(query, result.trace);
      result.ranking = hybrid_search(res_.sparse, res_.dense, query.text, qvec,
                                     pipeline_.output_depth, fusion_,
                                     pipeline_.similarity);
      result.ranking.query_id = query.query_id;
      result.trace.times.total_ms = ms_since(start);
      return result;
    }
    case Method::AvgPrf: return avg_prf_search(query);
    case Method::Hyde: return hyde_search(query, false);
    case Method::HydePrf: return hyde_search(query, true);
    case Method::Rede: return rede_rf_search(query, pipeline_.default_policy);
    case Method::RedeHydeDefault: return rede_rf_search(query, DefaultPolicy::HydePrf);
    case Method::Rerank: return rerank_search(query);
  }
  throw Error(ErrorCode::InvalidConfig, "unrecognized method");
}

}  // namespace rede
