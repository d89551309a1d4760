#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "rede/corpus_io.hpp"
#include "rede/dense_index.hpp"
#include "rede/encoder.hpp"
#include "rede/hybrid.hpp"
#include "rede/hyde.hpp"
#include "rede/llm_gateway.hpp"
#include "rede/pipeline.hpp"
#include "rede/relevance_judge.hpp"
#include "rede/sparse_index.hpp"

namespace rede::cli {

struct EncoderSettings {
  std::string type = "hash";  // hash | http
  Eigen::Index dim = 64;
  std::string url;
  std::chrono::milliseconds timeout{30000};
};

struct GatewaySettings {
  std::string type;  // "" (none) | mock | http
  std::filesystem::path script;
  std::string url;
  std::string model;
  std::chrono::milliseconds timeout{60000};
  GatewayOptions options;
};

struct JudgeSettings {
  std::string type;  // "" (none) | llm | oracle | lexical
  JudgeTemplate template_id = JudgeTemplate::Default;
  std::string positive_token;
  std::string negative_token;
  std::size_t max_doc_tokens = 128;
  int top_logprobs = 20;
  double threshold = 0.15;
};

/// Everything a subcommand needs, parsed from one JSON file. Relative paths
/// resolve against the config file's directory.
struct RunConfig {
  std::filesystem::path corpus;
  RecordFormat corpus_format = RecordFormat::Jsonl;
  std::optional<RecordFormat> queries_format;
  std::filesystem::path qrels;
  std::filesystem::path sparse_index;
  std::filesystem::path vectors;
  std::filesystem::path manifest;
  std::filesystem::path templates_dir;
  EncoderSettings encoder;
  GatewaySettings gateway;
  JudgeSettings judge;
  PipelineConfig pipeline;
  FusionConfig fusion;
  Bm25Params bm25;
  HydeConfig hyde;
  std::uint64_t seed = 0;

  static RunConfig from_json(const nlohmann::json& doc,
                             const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies REDE_GATEWAY_URL when set.
  void apply_environment();

  /// Throws InvalidConfig naming the first referenced path that is missing.
  void validate_paths() const;
};

/// Loaded indices and backends for one config.
struct Runtime {
  Corpus corpus;
  SparseIndex sparse;
  DenseIndex dense;
  Qrels qrels;
  std::unique_ptr<EncoderBackend> encoder;
  std::unique_ptr<LlmGateway> gateway;
  std::unique_ptr<JudgeBackend> judge;
  std::unique_ptr<SearchEngine> engine;

  static std::unique_ptr<Runtime> open(const RunConfig& config);
};

std::unique_ptr<EncoderBackend> make_encoder(const EncoderSettings& settings);

RecordFormat infer_format(const std::filesystem::path& path,
                          std::optional<RecordFormat> declared);

}  // namespace rede::cli
