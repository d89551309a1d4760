#include "rede/llm_gateway.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "http_util.hpp"
#include "rede/error.hpp"

namespace rede {

using nlohmann::json;

void CompletionRequest::validate() const {
  if (max_new_tokens < 1) {
    throw Error(ErrorCode::PreconditionViolation, "max_new_tokens must be >= 1");
  }
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::PreconditionViolation, "temperature must be >= 0");
  }
  if (want_first_token_logprobs && top_logprobs < 1) {
    throw Error(ErrorCode::PreconditionViolation, "top_logprobs must be >= 1");
  }
}

namespace {

std::optional<std::map<std::string, double>> parse_logprobs(const json& node) {
  if (node.is_null()) return std::nullopt;
  if (!node.is_object()) {
    throw Error(ErrorCode::MalformedRecord,
                "first_token_logprobs must be an object of token -> logprob");
  }
  std::map<std::string, double> out;
  for (const auto& [token, lp] : node.items()) {
    if (!lp.is_number()) {
      throw Error(ErrorCode::MalformedRecord, "logprob for '" + token +
                                                  "' is not a number");
    }
    out.emplace(token, lp.get<double>());
  }
  if (out.empty()) return std::nullopt;
  return out;
}

}  // namespace

MockBackend::MockBackend(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

std::unique_ptr<MockBackend> MockBackend::from_json(const std::string& text) {
  const auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorCode::MalformedRecord, "mock script must be a JSON array");
  }
  std::vector<MockRule> rules;
  for (const auto& item : doc) {
    if (!item.is_object()) {
      throw Error(ErrorCode::MalformedRecord, "mock rule must be an object");
    }
    MockRule rule;
    rule.match_substring = item.value("match_substring", std::string());
    rule.text = item.value("text", std::string());
    if (auto it = item.find("first_token_logprobs"); it != item.end()) {
      rule.first_token_logprobs = parse_logprobs(*it);
    }
    rule.delay = std::chrono::microseconds(
        static_cast<long long>(item.value("delay_ms", 0.0) * 1000.0));
    rule.error = item.value("error", std::string());
    if (!rule.error.empty() && rule.error != "timeout" &&
        rule.error != "unavailable") {
      throw Error(ErrorCode::MalformedRecord,
                  "mock rule error must be \"timeout\" or \"unavailable\"");
    }
    rules.push_back(std::move(rule));
  }
  return std::make_unique<MockBackend>(std::move(rules));
}

std::unique_ptr<MockBackend> MockBackend::from_script(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open mock script '" + path.string() + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  ++calls_;
  for (const auto& rule : rules_) {
    if (request.prompt.find(rule.match_substring) == std::string::npos) continue;
    if (rule.delay.count() > 0) std::this_thread::sleep_for(rule.delay);
    if (rule.error == "timeout") {
      throw Error(ErrorCode::Timeout, "scripted timeout");
    }
    if (rule.error == "unavailable") {
      throw Error(ErrorCode::BackendUnavailable, "scripted failure");
    }
    CompletionResponse response{rule.text, std::nullopt};
    if (request.want_first_token_logprobs) {
      if (!rule.first_token_logprobs) {
        throw Error(ErrorCode::LogprobsUnsupported,
                    "scripted rule '" + rule.match_substring + "' has no logprobs");
      }
      response.first_token_logprobs = rule.first_token_logprobs;
    }
    return response;
  }
  throw Error(ErrorCode::BackendUnavailable, "no scripted response matches the prompt");
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::tie(host_, path_) = detail::split_url(config_.url);
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  httplib::Client client(host_);
  const auto ms = config_.timeout.count();
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_write_timeout(ms / 1000, (ms % 1000) * 1000);

  json body = {{"model", config_.model},
               {"prompt", request.prompt},
               {"max_tokens", request.max_new_tokens},
               {"temperature", request.temperature}};
  if (request.want_first_token_logprobs) body["logprobs"] = request.top_logprobs;
  if (request.seed) body["seed"] = *request.seed;

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const bool timed_out =
        res.error() == httplib::Error::ConnectionTimeout ||
        (res.error() == httplib::Error::Read && elapsed >= config_.timeout * 9 / 10);
    throw Error(timed_out ? ErrorCode::Timeout : ErrorCode::BackendUnavailable,
                config_.url + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 408 || res->status == 504) {
    throw Error(ErrorCode::Timeout, config_.url + " returned HTTP " +
                                        std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BackendUnavailable,
                config_.url + " returned HTTP " + std::to_string(res->status));
  }
  const auto reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object() || !reply.contains("text") ||
      !reply["text"].is_string()) {
    throw Error(ErrorCode::BackendUnavailable, "reply lacks a \"text\" string");
  }
  CompletionResponse response{reply["text"].get<std::string>(), std::nullopt};
  if (request.want_first_token_logprobs) {
    auto it = reply.find("first_token_logprobs");
    if (it != reply.end()) response.first_token_logprobs = parse_logprobs(*it);
    if (!response.first_token_logprobs) {
      throw Error(ErrorCode::LogprobsUnsupported,
                  config_.url + " returned no first-token logprobs");
    }
  }
  return response;
}

LlmGateway::LlmGateway(std::unique_ptr<LlmBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(options),
      slots_(std::clamp(options.parallelism, 1, 1024)) {
  if (!backend_) throw Error(ErrorCode::InvalidConfig, "gateway needs a backend");
  if (options_.max_retries < 0) {
    throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  }
  options_.parallelism = std::clamp(options_.parallelism, 1, 1024);
}

CompletionResponse LlmGateway::complete(const CompletionRequest& request) {
  request.validate();
  (request.purpose == CallPurpose::Judge ? judge_calls_ : generation_calls_)++;

  auto backoff = options_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    ++attempts_;
    try {
      slots_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{slots_};
      return backend_->complete(request);
    } catch (const Error& e) {
      const bool transient = e.code() == ErrorCode::BackendUnavailable ||
                             e.code() == ErrorCode::Timeout;
      if (!transient || attempt >= options_.max_retries) {
        ++failures_;
        throw;
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

GatewayCounters LlmGateway::counters() const {
  return {judge_calls_.load(), generation_calls_.load(), attempts_.load(),
          failures_.load()};
}

void LlmGateway::reset_counters() {
  judge_calls_ = 0;
  generation_calls_ = 0;
  attempts_ = 0;
  failures_ = 0;
}

}  // namespace rede
