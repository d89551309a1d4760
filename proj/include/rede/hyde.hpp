#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rede/llm_gateway.hpp"

namespace rede {

/// Dataset families with their own generation prompt.
enum class HydeTask {
  WebSearch,   // TREC DL19/DL20
  SciFact,
  Scientific,  // TREC-COVID, NFCorpus
  Fiqa,
  DbPedia,
  News,        // TREC-News, Robust04
};

HydeTask parse_hyde_task(std::string_view name);
std::string_view to_string(HydeTask task);

/// Built-in prompt; `with_context` selects the {context} form.
std::string_view builtin_hyde_template(HydeTask task, bool with_context);

struct HydeConfig {
  int n_samples = 8;
  double temperature = 0.7;
  int max_new_tokens = 512;
  HydeTask task = HydeTask::WebSearch;
  /// Cap on context documents for the context form; 0 uses every candidate.
  std::size_t context_docs = 0;
  std::size_t context_doc_tokens = 128;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

/// Context documents are truncated to `context_doc_tokens` whitespace tokens
/// each and joined by newlines in the order given.
std::string render_hyde_prompt(
    HydeTask task, std::string_view query_text,
    std::span<const std::string> context_docs,
    std::size_t context_doc_tokens = 128,
    std::optional<std::string_view> template_text = std::nullopt);

struct HypotheticalDocs {
  std::vector<std::string> texts;  // sample order
  int empty_retries = 0;
  int dropped = 0;
};

/// Samples `n_samples` completions (concurrently up to the gateway's
/// parallelism). An empty completion is retried once and dropped if still
/// empty; throws AllSamplesEmpty when nothing survives.
HypotheticalDocs generate_hypothetical_docs(
    LlmGateway& gateway, const HydeConfig& config, std::string_view query_text,
    std::span<const std::string> context_docs = {},
    std::optional<std::string_view> template_text = std::nullopt);

}  // namespace rede
