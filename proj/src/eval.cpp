#include "rede/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rede/error.hpp"

namespace rede {

using nlohmann::json;

namespace {

double gain_of(int rel, Gain gain) {
  if (rel <= 0) return 0.0;
  return gain == Gain::Linear ? static_cast<double>(rel)
                              : std::exp2(static_cast<double>(rel)) - 1.0;
}

json vector_json(const Vector& v) {
  return json(std::vector<float>(v.data(), v.data() + v.size()));
}

}  // namespace

double ndcg_at_k(const RankedList& ranked, const QueryQrels& qrels,
                 std::size_t k, Gain gain) {
  if (k == 0) throw Error(ErrorCode::PreconditionViolation, "NDCG cutoff must be >= 1");
  std::vector<int> ideal;
  for (const auto& [_, rel] : qrels) {
    if (rel > 0) ideal.push_back(rel);
  }
  if (ideal.empty()) return 0.0;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain_of(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranked.entries.size()); ++i) {
    auto it = qrels.find(ranked.entries[i].doc_id);
    if (it == qrels.end()) continue;
    dcg += gain_of(it->second, gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

MetricReport evaluate_run(std::span<const RankedList> run, const Qrels& qrels,
                          std::size_t k, Gain gain) {
  if (run.empty()) throw Error(ErrorCode::EmptyRun, "run has no queries");
  MetricReport report;
  report.k = k;
  for (const auto& list : run) {
    auto it = qrels.find(list.query_id);
    if (it == qrels.end()) continue;
    report.per_query[list.query_id] = ndcg_at_k(list, it->second, k, gain);
  }
  double sum = 0.0;
  for (const auto& [_, v] : report.per_query) sum += v;
  report.mean = report.per_query.empty()
                    ? 0.0
                    : sum / static_cast<double>(report.per_query.size());
  return report;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

LatencyReport measure_latency(const PipelineFn& pipeline,
                              std::span<const Query> queries,
                              std::size_t warmup) {
  LatencyReport report;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = pipeline(queries[i]);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    if (i < warmup) continue;
    report.query_ids.push_back(queries[i].query_id);
    report.per_query_ms.push_back(ms);
    report.judge_calls += result.trace.judge_calls;
    report.generation_calls += result.trace.generation_calls;
  }
  const auto& t = report.per_query_ms;
  if (!t.empty()) {
    report.mean_ms = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
    report.min_ms = *std::min_element(t.begin(), t.end());
    report.max_ms = *std::max_element(t.begin(), t.end());
    report.p50_ms = percentile(t, 0.50);
    report.p95_ms = percentile(t, 0.95);
  }
  return report;
}

std::string format_float(float value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "float formatting failed");
  return std::string(buf, ptr);
}

std::size_t export_distill_dataset(const SearchEngine& engine,
                                   std::span<const Query> queries,
                                   const std::filesystem::path& out_path,
                                   std::vector<SearchTrace>* traces) {
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write '" + out_path.string() + "'");
  }
  std::size_t written = 0;
  for (const auto& query : queries) {
    auto result = engine.rede_rf_search(query, DefaultPolicy::None);
    auto& trace = result.trace;
    if (trace.kstar > 0 && trace.refined_vector) {
      const auto& target = *trace.refined_vector;
      out << "{\"query_id\":" << json(query.query_id).dump()
          << ",\"text\":" << json(query.text).dump() << ",\"target\":[";
      for (Eigen::Index i = 0; i < target.size(); ++i) {
        if (i > 0) out << ',';
        out << format_float(target[i]);
      }
      out << "]}\n";
      ++written;
    }
    if (traces) traces->push_back(std::move(trace));
  }
  if (!out.flush()) {
    throw Error(ErrorCode::IoError, "write failed for '" + out_path.string() + "'");
  }
  return written;
}

std::vector<DistillRecord> load_distill_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::vector<DistillRecord> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("query_id") || !j.contains("target")) {
      throw Error(ErrorCode::MalformedRecord, "bad distill record", line_no);
    }
    const auto values = j["target"].get<std::vector<float>>();
    records.push_back({j["query_id"].get<std::string>(), j.value("text", ""),
                       Eigen::Map<const Vector>(values.data(),
                                                static_cast<Eigen::Index>(values.size()))});
  }
  return records;
}

json to_json(const MetricReport& report) {
  return {{"metric", report.metric},
          {"k", report.k},
          {"mean", report.mean},
          {"per_query", report.per_query}};
}

json to_json(const LatencyReport& report) {
  json per_query = json::object();
  for (std::size_t i = 0; i < report.query_ids.size(); ++i) {
    per_query[report.query_ids[i]] = report.per_query_ms[i];
  }
  return {{"per_query_ms", per_query},
          {"mean_ms", report.mean_ms},
          {"p50_ms", report.p50_ms},
          {"p95_ms", report.p95_ms},
          {"min_ms", report.min_ms},
          {"max_ms", report.max_ms},
          {"llm_call_counts",
           {{"judge", report.judge_calls}, {"generation", report.generation_calls}}}};
}

json to_json(const SearchTrace& trace) {
  json candidates = json::array();
  for (const auto& c : trace.candidates.entries) {
    candidates.push_back({{"doc_id", c.doc_id}, {"score", c.score}});
  }
  json judgments = json::array();
  for (const auto& j : trace.judgments) {
    judgments.push_back(
        {{"doc_id", j.doc_id}, {"p_relevant", j.p_relevant}, {"label", j.label}});
  }
  json out = {{"query_id", trace.query_id},
              {"method", to_string(trace.method)},
              {"path_taken", to_string(trace.path_taken)},
              {"kstar", trace.kstar},
              {"candidates", candidates},
              {"judgments", judgments},
              {"skipped", trace.skipped},
              {"feedback_doc_ids", trace.feedback_doc_ids},
              {"llm_calls",
               {{"judge", trace.judge_calls}, {"generation", trace.generation_calls}}},
              {"context_fetches", trace.context_fetches},
              {"hypothetical_docs", trace.hypothetical_docs},
              {"times_ms",
               {{"encode", trace.times.encode_ms},
                {"initial", trace.times.initial_ms},
                {"judge", trace.times.judge_ms},
                {"generation", trace.times.generation_ms},
                {"search", trace.times.search_ms},
                {"total", trace.times.total_ms}}},
              {"warnings", trace.warnings}};
  if (trace.refined_vector) out["refined_vector"] = vector_json(*trace.refined_vector);
  return out;
}

}  // namespace rede
