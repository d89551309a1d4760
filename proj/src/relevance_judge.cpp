#include "rede/relevance_judge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "rede/error.hpp"
#include "rede/parallel.hpp"

namespace rede {

namespace {

constexpr std::string_view kDefaultTemplate =
    "For the following query and document, judge whether they are relevant. "
    "Output \"1\" if the document is dedicated to the query and contains the "
    "exact answer and output \"0\" if the document has nothing to do with the "
    "query.\n"
    "\n"
    "Query: {query}\n"
    "Document: {document}\n"
    "Output:";

constexpr std::string_view kPointwiseYesNoTemplate =
    "Passage: {document}\n"
    "Query: {query}\n"
    "Does the passage answer the query? Answer 'Yes' or 'No'.";

constexpr std::string_view kRgYnTemplate =
    "For the following query and document, judge whether they are relevant. "
    "Output “Yes” or “No”.\n"
    "\n"
    "Query: {query}\n"
    "Document: {document}\n"
    "Output:";

constexpr std::string_view kRgYnStarTemplate =
    "For the following query and document, judge whether they are relevant. "
    "Output “Yes” if the passage is dedicated to the query and "
    "contains the exact answer and output \"No\" if the passage has nothing "
    "to do with the query.\n"
    "\n"
    "Query: {query}\n"
    "Document: {document}\n"
    "Output:";

constexpr std::string_view kRaterGuidelineTemplate =
    "You are a search quality rater evaluating the relevance of web pages. "
    "Given a query and a web page, you must provide a score on an integer "
    "scale of 0 to 1 with the following meanings:\n"
    "\n"
    "1 = highly relevant, very helpful for this query\n"
    "0 = not relevant, should never be shown for this query\n"
    "\n"
    "Assume that you are writing a report on the subject of the topic. If the "
    "web page is primarily about the topic, or contains vital information "
    "about the topic, mark it 1. Otherwise, mark it 0.\n"
    "Passage: {document}\n"
    "Query: {query}\n"
    "Score:";

// Strips the leading-space markers tokenizers put on word-initial pieces.
std::string_view normalize_token(std::string_view token) {
  while (true) {
    if (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
      token.remove_prefix(1);
    } else if (token.starts_with("▁")) {  // SentencePiece
      token.remove_prefix(3);
    } else if (token.starts_with("Ġ")) {  // byte-level BPE
      token.remove_prefix(2);
    } else {
      return token;
    }
  }
}

std::optional<double> find_logprob(const std::map<std::string, double>& lps,
                                   std::string_view wanted) {
  std::optional<double> best;
  for (const auto& [token, lp] : lps) {
    if (normalize_token(token) == wanted && (!best || lp > *best)) best = lp;
  }
  return best;
}

std::set<std::string> token_set(std::string_view text) {
  auto tokens = tokenize(text);
  return {std::make_move_iterator(tokens.begin()),
          std::make_move_iterator(tokens.end())};
}

}  // namespace

JudgeTemplate parse_judge_template(std::string_view name) {
  if (name == "default") return JudgeTemplate::Default;
  if (name == "pointwise_yes_no") return JudgeTemplate::PointwiseYesNo;
  if (name == "rg_yn") return JudgeTemplate::RgYn;
  if (name == "rg_yn_star") return JudgeTemplate::RgYnStar;
  if (name == "rater_guideline") return JudgeTemplate::RaterGuideline;
  throw Error(ErrorCode::UnknownTemplate, std::string(name));
}

std::string_view to_string(JudgeTemplate id) {
  switch (id) {
    case JudgeTemplate::Default: return "default";
    case JudgeTemplate::PointwiseYesNo: return "pointwise_yes_no";
    case JudgeTemplate::RgYn: return "rg_yn";
    case JudgeTemplate::RgYnStar: return "rg_yn_star";
    case JudgeTemplate::RaterGuideline: return "rater_guideline";
  }
  throw Error(ErrorCode::UnknownTemplate, "unrecognized judge template id");
}

std::string_view builtin_judge_template(JudgeTemplate id) {
  switch (id) {
    case JudgeTemplate::Default: return kDefaultTemplate;
    case JudgeTemplate::PointwiseYesNo: return kPointwiseYesNoTemplate;
    case JudgeTemplate::RgYn: return kRgYnTemplate;
    case JudgeTemplate::RgYnStar: return kRgYnStarTemplate;
    case JudgeTemplate::RaterGuideline: return kRaterGuidelineTemplate;
  }
  throw Error(ErrorCode::UnknownTemplate, "unrecognized judge template id");
}

std::pair<std::string, std::string> default_judge_tokens(JudgeTemplate id) {
  switch (id) {
    case JudgeTemplate::Default:
    case JudgeTemplate::RaterGuideline:
      return {"1", "0"};
    case JudgeTemplate::PointwiseYesNo:
    case JudgeTemplate::RgYn:
    case JudgeTemplate::RgYnStar:
      return {"Yes", "No"};
  }
  throw Error(ErrorCode::UnknownTemplate, "unrecognized judge template id");
}

JudgePrompt render_judge_prompt(JudgeTemplate template_id,
                                std::string_view query_text,
                                std::string_view doc_text,
                                std::size_t max_doc_tokens,
                                std::optional<std::string_view> template_text) {
  if (query_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::PreconditionViolation, "judge prompt needs query text");
  }
  const std::string_view tmpl =
      template_text ? *template_text : builtin_judge_template(template_id);
  constexpr std::string_view kQuery = "{query}";
  constexpr std::string_view kDocument = "{document}";
  if (tmpl.find(kQuery) == std::string_view::npos ||
      tmpl.find(kDocument) == std::string_view::npos) {
    throw Error(ErrorCode::UnknownTemplate,
                "judge template lacks {query} or {document}");
  }
  const std::string doc = truncate_whitespace_tokens(doc_text, max_doc_tokens);

  // Single pass, so placeholder-like text inside the inputs stays literal.
  JudgePrompt prompt{template_id, {}};
  prompt.rendered.reserve(tmpl.size() + query_text.size() + doc.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.substr(i).starts_with(kQuery)) {
      prompt.rendered.append(query_text);
      i += kQuery.size();
    } else if (tmpl.substr(i).starts_with(kDocument)) {
      prompt.rendered.append(doc);
      i += kDocument.size();
    } else {
      prompt.rendered.push_back(tmpl[i++]);
    }
  }
  return prompt;
}

double two_token_probability(double logprob_positive, double logprob_negative) {
  // exp(a) / (exp(a) + exp(b)) written to depend only on the difference.
  return 1.0 / (1.0 + std::exp(logprob_negative - logprob_positive));
}

LlmJudge::LlmJudge(LlmGateway& gateway, LlmJudgeConfig config)
    : gateway_(gateway), config_(std::move(config)) {
  auto [pos, neg] = default_judge_tokens(config_.template_id);
  if (config_.positive_token.empty()) config_.positive_token = pos;
  if (config_.negative_token.empty()) config_.negative_token = neg;
  if (config_.positive_token == config_.negative_token) {
    throw Error(ErrorCode::InvalidConfig, "judge tokens must differ");
  }
}

RelevanceJudgment LlmJudge::score(const Query& query, const Document& doc) {
  const auto prompt = render_judge_prompt(
      config_.template_id, query.text, doc.contents(), config_.max_doc_tokens,
      config_.template_text ? std::optional<std::string_view>(*config_.template_text)
                            : std::nullopt);
  CompletionRequest request;
  request.prompt = prompt.rendered;
  request.max_new_tokens = 1;
  request.temperature = 0.0;
  request.want_first_token_logprobs = true;
  request.top_logprobs = config_.top_logprobs;
  request.purpose = CallPurpose::Judge;
  const auto response = gateway_.complete(request);
  if (!response.first_token_logprobs || response.first_token_logprobs->empty()) {
    throw Error(ErrorCode::JudgeUnavailable, "no logprobs for " + doc.doc_id);
  }
  const auto& lps = *response.first_token_logprobs;
  auto pos = find_logprob(lps, config_.positive_token);
  auto neg = find_logprob(lps, config_.negative_token);
  if (!pos && !neg) {
    throw Error(ErrorCode::JudgeUnavailable,
                "neither '" + config_.positive_token + "' nor '" +
                    config_.negative_token + "' in top logprobs for " + doc.doc_id);
  }
  if (!pos || !neg) {
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& [_, lp] : lps) floor = std::min(floor, lp);
    (pos ? neg : pos) = floor - 10.0;
  }
  const double p = two_token_probability(*pos, *neg);
  return {query.query_id, doc.doc_id, p, p > 0.5};
}

OracleJudge::OracleJudge(const Qrels& qrels) : qrels_(qrels) {}

RelevanceJudgment OracleJudge::score(const Query& query, const Document& doc) {
  double p = 0.0;
  if (auto q = qrels_.find(query.query_id); q != qrels_.end()) {
    if (auto d = q->second.find(doc.doc_id); d != q->second.end() && d->second > 0) {
      p = 1.0;
    }
  }
  return {query.query_id, doc.doc_id, p, p > 0.5};
}

LexicalJudge::LexicalJudge(double threshold) : threshold_(threshold) {}

RelevanceJudgment LexicalJudge::score(const Query& query, const Document& doc) {
  const auto q = token_set(query.text);
  const auto d = token_set(doc.contents());
  std::size_t shared = 0;
  for (const auto& t : q) shared += d.count(t);
  const std::size_t joint = q.size() + d.size() - shared;
  const double jaccard =
      joint == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(joint);
  const double p = jaccard >= threshold_ ? 1.0 : 0.0;
  return {query.query_id, doc.doc_id, p, p > 0.5};
}

JudgeOutcome judge_candidates(JudgeBackend& judge, const Query& query,
                              const RankedList& candidates, const Corpus& corpus,
                              int parallelism) {
  const auto n = candidates.entries.size();
  std::vector<std::optional<RelevanceJudgment>> slots(n);
  parallel_for(n, parallelism, [&](std::size_t i) {
    const auto& doc = corpus.at(candidates.entries[i].doc_id);
    try {
      slots[i] = judge.score(query, doc);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::JudgeUnavailable) throw;
    }
  });

  JudgeOutcome out;
  out.relevant.query_id = query.query_id;
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) {
      out.skipped.push_back(candidates.entries[i].doc_id);
      continue;
    }
    if (slots[i]->label) {
      out.relevant.docs.push_back({slots[i]->doc_id, slots[i]->p_relevant});
    }
    out.judgments.push_back(std::move(*slots[i]));
  }
  if (n > 0 && out.skipped.size() == n) {
    throw Error(ErrorCode::JudgeUnavailable,
                "no candidate could be judged for query " + query.query_id);
  }
  std::stable_sort(out.relevant.docs.begin(), out.relevant.docs.end(),
                   [](const ScoredDoc& a, const ScoredDoc& b) {
                     return a.score > b.score;
                   });
  return out;
}

}  // namespace rede
