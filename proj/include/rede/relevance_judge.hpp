#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rede/corpus_io.hpp"
#include "rede/llm_gateway.hpp"
#include "rede/types.hpp"

namespace rede {

enum class JudgeTemplate {
  Default,
  PointwiseYesNo,
  RgYn,
  RgYnStar,
  RaterGuideline,
};

JudgeTemplate parse_judge_template(std::string_view name);
std::string_view to_string(JudgeTemplate id);

/// Built-in template text with {query} and {document} placeholders.
std::string_view builtin_judge_template(JudgeTemplate id);

/// Positive/negative answer tokens the template asks for.
std::pair<std::string, std::string> default_judge_tokens(JudgeTemplate id);

struct JudgePrompt {
  JudgeTemplate template_id = JudgeTemplate::Default;
  std::string rendered;
};

/// Truncates the document to its first `max_doc_tokens` whitespace tokens and
/// fills the placeholders. `template_text` overrides the built-in text.
JudgePrompt render_judge_prompt(
    JudgeTemplate template_id, std::string_view query_text,
    std::string_view doc_text, std::size_t max_doc_tokens = 128,
    std::optional<std::string_view> template_text = std::nullopt);

struct RelevanceJudgment {
  std::string query_id;
  std::string doc_id;
  double p_relevant = 0.0;
  bool label = false;  // p_relevant > 0.5

  friend bool operator==(const RelevanceJudgment&,
                         const RelevanceJudgment&) = default;
};

/// Two-token softmax, exp(lp_pos) / (exp(lp_pos) + exp(lp_neg)).
double two_token_probability(double logprob_positive, double logprob_negative);

/// Pointwise relevance scorer.
class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;

  /// Throws JudgeUnavailable when no usable score comes back.
  virtual RelevanceJudgment score(const Query& query, const Document& doc) = 0;
};

struct LlmJudgeConfig {
  JudgeTemplate template_id = JudgeTemplate::Default;
  std::optional<std::string> template_text;  // loaded from a template file
  std::string positive_token;  // empty = template default
  std::string negative_token;
  std::size_t max_doc_tokens = 128;
  int top_logprobs = 20;
};

/// Reads first-token logprobs of the two answer tokens through the gateway.
/// If exactly one token is missing from the returned top-K it is assigned
/// (min returned logprob - 10).
class LlmJudge final : public JudgeBackend {
 public:
  LlmJudge(LlmGateway& gateway, LlmJudgeConfig config);
  RelevanceJudgment score(const Query& query, const Document& doc) override;

 private:
  LlmGateway& gateway_;
  LlmJudgeConfig config_;
};

/// p = 1 when the qrels grade is positive, else 0.
class OracleJudge final : public JudgeBackend {
 public:
  explicit OracleJudge(const Qrels& qrels);
  RelevanceJudgment score(const Query& query, const Document& doc) override;

 private:
  const Qrels& qrels_;
};

/// p = 1 when the Jaccard overlap of query and document token sets reaches
/// the threshold. Deterministic stand-in for end-to-end tests.
class LexicalJudge final : public JudgeBackend {
 public:
  explicit LexicalJudge(double threshold = 0.15);
  RelevanceJudgment score(const Query& query, const Document& doc) override;

 private:
  double threshold_;
};

struct RelevantSet {
  std::string query_id;
  std::vector<ScoredDoc> docs;  // (doc_id, p_relevant), best first
};

struct JudgeOutcome {
  RelevantSet relevant;
  std::vector<RelevanceJudgment> judgments;  // candidate order, skipped omitted
  std::vector<std::string> skipped;          // doc ids that could not be judged
};

/// Judges every candidate once. Relevant docs come back by descending
/// p_relevant, ties by candidate rank. Per-doc JudgeUnavailable becomes a
/// skip; it only throws if every candidate fails.
JudgeOutcome judge_candidates(JudgeBackend& judge, const Query& query,
                              const RankedList& candidates,
                              const Corpus& corpus, int parallelism = 1);

}  // namespace rede
