#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rede/pipeline.hpp"
#include "rede/types.hpp"

namespace rede {

enum class Gain { Linear, Exponential };

/// NDCG@k with rel / log2(rank + 1) (or 2^rel - 1) gains. The ideal ordering
/// comes from the positive qrels; 0 when there are none.
double ndcg_at_k(const RankedList& ranked, const QueryQrels& qrels,
                 std::size_t k, Gain gain = Gain::Linear);

struct MetricReport {
  std::string metric = "ndcg";
  std::size_t k = 10;
  std::map<std::string, double> per_query;
  double mean = 0.0;
};

/// Queries missing from `qrels` are excluded. Throws EmptyRun.
MetricReport evaluate_run(std::span<const RankedList> run, const Qrels& qrels,
                          std::size_t k, Gain gain = Gain::Linear);

struct LatencyReport {
  std::vector<std::string> query_ids;
  std::vector<double> per_query_ms;
  double mean_ms = 0, p50_ms = 0, p95_ms = 0, min_ms = 0, max_ms = 0;
  std::uint64_t judge_calls = 0;
  std::uint64_t generation_calls = 0;
};

/// Linear interpolation between order statistics; `q` in [0, 1].
double percentile(std::vector<double> values, double q);

using PipelineFn = std::function<SearchResult(const Query&)>;

/// Runs queries one at a time. The first `warmup` queries are executed but
/// excluded from timings and call counts.
LatencyReport measure_latency(const PipelineFn& pipeline,
                              std::span<const Query> queries,
                              std::size_t warmup);

struct DistillRecord {
  std::string query_id;
  std::string text;
  Vector target;
};

/// Runs ReDE-RF with no default and writes one JSONL record per query that
/// found at least one relevant document. Returns the record count.
std::size_t export_distill_dataset(const SearchEngine& engine,
                                   std::span<const Query> queries,
                                   const std::filesystem::path& out_path,
                                   std::vector<SearchTrace>* traces = nullptr);

std::vector<DistillRecord> load_distill_dataset(
    const std::filesystem::path& path);

/// Shortest decimal that round-trips the float.
std::string format_float(float value);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const LatencyReport& report);
nlohmann::json to_json(const SearchTrace& trace);

}  // namespace rede
