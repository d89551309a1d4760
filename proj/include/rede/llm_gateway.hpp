#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace rede {

enum class CallPurpose { Judge, Generation };

struct CompletionRequest {
  std::string prompt;
  int max_new_tokens = 1;
  double temperature = 0.0;
  bool want_first_token_logprobs = false;
  int top_logprobs = 5;
  std::optional<std::uint64_t> seed{};
  CallPurpose purpose = CallPurpose::Generation;

  void validate() const;
};

struct CompletionResponse {
  std::string text;
  /// token -> logprob (<= 0); present only when requested and supported.
  std::optional<std::map<std::string, double>> first_token_logprobs;

  friend bool operator==(const CompletionResponse&,
                         const CompletionResponse&) = default;
};

/// One completion endpoint. Throws BackendUnavailable, Timeout or
/// LogprobsUnsupported.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

/// Scripted backend. The first rule whose `match_substring` occurs in the
/// prompt answers; an empty substring matches everything.
struct MockRule {
  std::string match_substring;
  std::string text;
  std::optional<std::map<std::string, double>> first_token_logprobs;
  std::chrono::microseconds delay{0};
  /// "timeout" or "unavailable" makes the rule fail instead of answering.
  std::string error;
};

class MockBackend final : public LlmBackend {
 public:
  explicit MockBackend(std::vector<MockRule> rules);

  /// JSON array of {match_substring, text, first_token_logprobs?, delay_ms?,
  /// error?}.
  static std::unique_ptr<MockBackend> from_script(
      const std::filesystem::path& path);
  static std::unique_ptr<MockBackend> from_json(const std::string& json);

  CompletionResponse complete(const CompletionRequest& request) override;

  std::uint64_t calls() const { return calls_.load(); }

 private:
  std::vector<MockRule> rules_;
  std::atomic<std::uint64_t> calls_{0};
};

struct HttpBackendConfig {
  std::string url;  // http://host:port/path
  std::string model;
  std::chrono::milliseconds timeout{60000};
};

/// POST {"model","prompt","max_tokens","temperature","logprobs"?,"seed"?}
/// -> {"text","first_token_logprobs"?}.
class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  CompletionResponse complete(const CompletionRequest& request) override;

 private:
  HttpBackendConfig config_;
  std::string host_;
  std::string path_;
};

struct GatewayOptions {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{100};
  int parallelism = 4;
};

struct GatewayCounters {
  std::uint64_t judge = 0;
  std::uint64_t generation = 0;
  std::uint64_t attempts = 0;  // includes retries
  std::uint64_t failures = 0;

  std::uint64_t total() const { return judge + generation; }
};

/// Single entry point for all generative-model access. Adds bounded retries
/// with exponential backoff, a concurrency cap and call accounting.
class LlmGateway {
 public:
  explicit LlmGateway(std::unique_ptr<LlmBackend> backend,
                      GatewayOptions options = {});

  /// Retries BackendUnavailable and Timeout; LogprobsUnsupported is final.
  CompletionResponse complete(const CompletionRequest& request);

  /// Logical calls by purpose (one per complete(), regardless of retries).
  GatewayCounters counters() const;
  void reset_counters();

  int parallelism() const { return options_.parallelism; }
  LlmBackend& backend() { return *backend_; }

 private:
  std::unique_ptr<LlmBackend> backend_;
  GatewayOptions options_;
  std::counting_semaphore<1024> slots_;
  std::atomic<std::uint64_t> judge_calls_{0};
  std::atomic<std::uint64_t> generation_calls_{0};
  std::atomic<std::uint64_t> attempts_{0};
  std::atomic<std::uint64_t> failures_{0};
};

}  // namespace rede
