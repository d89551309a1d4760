#include "rede/hyde.hpp"

#include <atomic>

#include "rede/corpus_io.hpp"
#include "rede/error.hpp"
#include "rede/parallel.hpp"

namespace rede {

namespace {

struct TaskPrompts {
  std::string_view plain;
  std::string_view context;
};

TaskPrompts prompts_for(HydeTask task) {
  switch (task) {
    case HydeTask::WebSearch:
    case HydeTask::DbPedia:
      return {"Please write a passage to answer the question.\n"
              "Question: {query}\n"
              "Passage:",
              "Please write a passage to answer the question based on the "
              "context:\n"
              "Context:\n"
              "{context}\n"
              "Question: {query}\n"
              "Passage:"};
    case HydeTask::SciFact:
      return {"Please write a scientific paper passage to support/refute the "
              "claim.\n"
              "Claim: {query}\n"
              "Passage:",
              "Please write a scientific paper passage to support/refute the "
              "claim based on the context:\n"
              "Context:\n"
              "{context}\n"
              "Claim: {query}\n"
              "Passage:"};
    case HydeTask::Scientific:
      return {"Please write a scientific paper passage to answer the "
              "question.\n"
              "Question: {query}\n"
              "Passage:",
              "Please write a scientific paper passage to answer the question "
              "based on the context:\n"
              "Context:\n"
              "{context}\n"
              "Question: {query}\n"
              "Passage:"};
    case HydeTask::Fiqa:
      return {"Please write a financial article passage to answer the "
              "question.\n"
              "Question: {query}\n"
              "Passage:",
              "Please write a financial article passage to answer the question "
              "based on the context:\n"
              "Context:\n"
              "{context}\n"
              "Question: {query}\n"
              "Passage:"};
    case HydeTask::News:
      return {"Please write a news passage about the topic.\n"
              "Topic: {query}\n"
              "Passage:",
              "Please write a news passage about the topic based on the "
              "context:\n"
              "Context:\n"
              "{context}\n"
              "Topic: {query}\n"
              "Passage:"};
  }
  throw Error(ErrorCode::UnknownTemplate, "unrecognized HyDE task");
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

HydeTask parse_hyde_task(std::string_view name) {
  if (name == "web_search" || name == "dl19" || name == "dl20") return HydeTask::WebSearch;
  if (name == "scifact") return HydeTask::SciFact;
  if (name == "scientific" || name == "trec-covid" || name == "nfcorpus") {
    return HydeTask::Scientific;
  }
  if (name == "fiqa") return HydeTask::Fiqa;
  if (name == "dbpedia") return HydeTask::DbPedia;
  if (name == "news" || name == "trec-news" || name == "robust04") return HydeTask::News;
  throw Error(ErrorCode::UnknownTemplate, "no HyDE template for '" + std::string(name) + "'");
}

std::string_view to_string(HydeTask task) {
  switch (task) {
    case HydeTask::WebSearch: return "web_search";
    case HydeTask::SciFact: return "scifact";
    case HydeTask::Scientific: return "scientific";
    case HydeTask::Fiqa: return "fiqa";
    case HydeTask::DbPedia: return "dbpedia";
    case HydeTask::News: return "news";
  }
  throw Error(ErrorCode::UnknownTemplate, "unrecognized HyDE task");
}

std::string_view builtin_hyde_template(HydeTask task, bool with_context) {
  const auto p = prompts_for(task);
  return with_context ? p.context : p.plain;
}

void HydeConfig::validate() const {
  if (n_samples < 1) {
    throw Error(ErrorCode::InvalidConfig, "hyde n_samples must be >= 1");
  }
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "hyde temperature must be >= 0");
  }
  if (max_new_tokens < 1) {
    throw Error(ErrorCode::InvalidConfig, "hyde max_new_tokens must be >= 1");
  }
}

std::string render_hyde_prompt(HydeTask task, std::string_view query_text,
                               std::span<const std::string> context_docs,
                               std::size_t context_doc_tokens,
                               std::optional<std::string_view> template_text) {
  const bool with_context = !context_docs.empty();
  const std::string_view tmpl =
      template_text ? *template_text : builtin_hyde_template(task, with_context);
  constexpr std::string_view kQuery = "{query}";
  constexpr std::string_view kContext = "{context}";
  if (tmpl.find(kQuery) == std::string_view::npos ||
      (with_context && tmpl.find(kContext) == std::string_view::npos)) {
    throw Error(ErrorCode::UnknownTemplate,
                "HyDE template lacks a required placeholder");
  }
  std::string context;
  for (const auto& doc : context_docs) {
    if (!context.empty()) context.push_back('\n');
    context += truncate_whitespace_tokens(doc, context_doc_tokens);
  }
  std::string out;
  out.reserve(tmpl.size() + query_text.size() + context.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.substr(i).starts_with(kQuery)) {
      out.append(query_text);
      i += kQuery.size();
    } else if (tmpl.substr(i).starts_with(kContext)) {
      out.append(context);
      i += kContext.size();
    } else {
      out.push_back(tmpl[i++]);
    }
  }
  return out;
}

HypotheticalDocs generate_hypothetical_docs(
    LlmGateway& gateway, const HydeConfig& config, std::string_view query_text,
    std::span<const std::string> context_docs,
    std::optional<std::string_view> template_text) {
  config.validate();
  const auto prompt = render_hyde_prompt(config.task, query_text, context_docs,
                                         config.context_doc_tokens, template_text);
  const auto n = static_cast<std::size_t>(config.n_samples);
  std::vector<std::string> samples(n);
  std::atomic<int> retries{0};
  parallel_for(n, gateway.parallelism(), [&](std::size_t i) {
    CompletionRequest request;
    request.prompt = prompt;
    request.max_new_tokens = config.max_new_tokens;
    request.temperature = config.temperature;
    request.purpose = CallPurpose::Generation;
    if (config.seed) request.seed = *config.seed + i;
    samples[i] = gateway.complete(request).text;
    if (is_blank(samples[i])) {
      ++retries;
      samples[i] = gateway.complete(request).text;
    }
  });
  HypotheticalDocs out;
  out.empty_retries = retries.load();
  for (auto& s : samples) {
    if (is_blank(s)) {
      ++out.dropped;
    } else {
      out.texts.push_back(std::move(s));
    }
  }
  if (out.texts.empty()) {
    throw Error(ErrorCode::AllSamplesEmpty,
                std::to_string(n) + " samples were all empty");
  }
  return out;
}

}  // namespace rede
