#include <gtest/gtest.h>

#include <atomic>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "rede/encoder.hpp"
#include "rede/error.hpp"
#include "rede/llm_gateway.hpp"
#include "rede/parallel.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

using namespace rede;
using nlohmann::json;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidConfig;
}

class FlakyBackend final : public LlmBackend {
 public:
  FlakyBackend(int failures, ErrorCode code) : failures_(failures), code_(code) {}
  CompletionResponse complete(const CompletionRequest&) override {
    ++calls;
    if (failures_-- > 0) throw Error(code_, "flaky");
    return {"ok", std::nullopt};
  }
  std::atomic<int> calls{0};

 private:
  std::atomic<int> failures_;
  ErrorCode code_;
};

class ConcurrencyProbe final : public LlmBackend {
 public:
  CompletionResponse complete(const CompletionRequest&) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    return {"x", std::nullopt};
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

GatewayOptions fast(int retries = 3, int parallelism = 4) {
  return {retries, std::chrono::milliseconds(1), parallelism};
}

/// Local completion server on an ephemeral port.
struct TestServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port) + path;
  }
  ~TestServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

}  // namespace

TEST(MockBackend, FirstMatchingRuleAnswers) {
  auto mock = MockBackend::from_json(R"([
    {"match_substring": "judge", "text": "1", "first_token_logprobs": {"1": -0.1, "0": -2.5}},
    {"match_substring": "", "text": "generic"}
  ])");
  CompletionRequest judge_req{"please judge this", 1, 0.0, true, 5, std::nullopt,
                              CallPurpose::Judge};
  const auto r = mock->complete(judge_req);
  EXPECT_EQ(r.text, "1");
  ASSERT_TRUE(r.first_token_logprobs);
  EXPECT_EQ(r.first_token_logprobs->at("0"), -2.5);
  EXPECT_EQ(mock->complete({"anything"}).text, "generic");
  EXPECT_EQ(mock->calls(), 2u);
}

TEST(MockBackend, ScriptedFailures) {
  auto mock = MockBackend::from_json(R"([
    {"match_substring": "slow", "error": "timeout"},
    {"match_substring": "down", "error": "unavailable"},
    {"match_substring": "plain", "text": "no logprobs here"}
  ])");
  EXPECT_EQ(code_of([&] { mock->complete({"slow"}); }), ErrorCode::Timeout);
  EXPECT_EQ(code_of([&] { mock->complete({"down"}); }), ErrorCode::BackendUnavailable);
  EXPECT_EQ(code_of([&] { mock->complete({"unmatched"}); }), ErrorCode::BackendUnavailable);
  CompletionRequest want{"plain", 1, 0.0, true, 5};
  EXPECT_EQ(code_of([&] { mock->complete(want); }), ErrorCode::LogprobsUnsupported);
  EXPECT_EQ(code_of([] { MockBackend::from_json("{}"); }), ErrorCode::MalformedRecord);
  EXPECT_EQ(code_of([] { MockBackend::from_json(R"([{"error":"boom"}])"); }),
            ErrorCode::MalformedRecord);
}

TEST(LlmGateway, RetriesTransientErrors) {
  auto backend = std::make_unique<FlakyBackend>(2, ErrorCode::BackendUnavailable);
  auto* raw = backend.get();
  LlmGateway gw(std::move(backend), fast());
  EXPECT_EQ(gw.complete({"p"}).text, "ok");
  EXPECT_EQ(raw->calls, 3);
  const auto c = gw.counters();
  EXPECT_EQ(c.generation, 1u);
  EXPECT_EQ(c.attempts, 3u);
  EXPECT_EQ(c.failures, 0u);
}

TEST(LlmGateway, GivesUpAfterMaxRetries) {
  auto backend = std::make_unique<FlakyBackend>(10, ErrorCode::Timeout);
  auto* raw = backend.get();
  LlmGateway gw(std::move(backend), fast(2));
  EXPECT_EQ(code_of([&] { gw.complete({"p"}); }), ErrorCode::Timeout);
  EXPECT_EQ(raw->calls, 3);
  EXPECT_EQ(gw.counters().failures, 1u);
}

TEST(LlmGateway, DoesNotRetryLogprobsUnsupported) {
  auto backend = std::make_unique<FlakyBackend>(10, ErrorCode::LogprobsUnsupported);
  auto* raw = backend.get();
  LlmGateway gw(std::move(backend), fast());
  EXPECT_EQ(code_of([&] { gw.complete({"p"}); }), ErrorCode::LogprobsUnsupported);
  EXPECT_EQ(raw->calls, 1);
}

TEST(LlmGateway, CountsByPurpose) {
  LlmGateway gw(MockBackend::from_json(
                    R"([{"match_substring":"","text":"t","first_token_logprobs":{"a":-1}}])"),
                fast());
  for (int i = 0; i < 3; ++i) gw.complete({"x", 1, 0.0, true, 5, std::nullopt, CallPurpose::Judge});
  for (int i = 0; i < 2; ++i) gw.complete({"x", 8, 0.7});
  auto c = gw.counters();
  EXPECT_EQ(c.judge, 3u);
  EXPECT_EQ(c.generation, 2u);
  EXPECT_EQ(c.total(), 5u);
  gw.reset_counters();
  EXPECT_EQ(gw.counters().total(), 0u);
}

TEST(LlmGateway, RespectsParallelismCap) {
  auto backend = std::make_unique<ConcurrencyProbe>();
  auto* raw = backend.get();
  LlmGateway gw(std::move(backend), fast(0, 2));
  parallel_for(16, 8, [&](std::size_t) { gw.complete({"p"}); });
  EXPECT_LE(raw->peak.load(), 2);
  EXPECT_GE(raw->peak.load(), 1);
}

TEST(LlmGateway, ValidatesRequests) {
  LlmGateway gw(MockBackend::from_json(R"([{"text":"t"}])"), fast());
  EXPECT_EQ(code_of([&] { gw.complete({"p", 0}); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([&] { gw.complete({"p", 1, -1.0}); }), ErrorCode::PreconditionViolation);
  EXPECT_EQ(code_of([] { LlmGateway(nullptr); }), ErrorCode::InvalidConfig);
}

TEST(HttpBackend, SendsWireFieldsAndParsesReply) {
  TestServer ts;
  json seen;
  std::mutex m;
  ts.server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(m);
    seen = json::parse(req.body);
    res.set_content(R"({"text":"Yes","first_token_logprobs":{"Yes":-0.2,"No":-1.9}})",
                    "application/json");
  });
  ts.start();
  HttpBackend backend({ts.url("/v1/completions"), "m7", std::chrono::milliseconds(2000)});
  CompletionRequest req{"judge me", 1, 0.0, true, 20, 42, CallPurpose::Judge};
  const auto r = backend.complete(req);
  EXPECT_EQ(r.text, "Yes");
  EXPECT_EQ(r.first_token_logprobs->at("No"), -1.9);
  std::lock_guard lock(m);
  EXPECT_EQ(seen["model"], "m7");
  EXPECT_EQ(seen["prompt"], "judge me");
  EXPECT_EQ(seen["max_tokens"], 1);
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["logprobs"], 20);
  EXPECT_EQ(seen["seed"], 42);
}

TEST(HttpBackend, MapsFailures) {
  TestServer ts;
  ts.server.Post("/err", [](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
  });
  ts.server.Post("/gw_timeout", [](const httplib::Request&, httplib::Response& res) {
    res.status = 504;
  });
  ts.server.Post("/nolp", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":"Yes"})", "application/json");
  });
  ts.server.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"text":"late"})", "application/json");
  });
  ts.start();
  const auto ms = std::chrono::milliseconds(200);
  CompletionRequest lp{"p", 1, 0.0, true, 5};
  EXPECT_EQ(code_of([&] { HttpBackend({ts.url("/err"), "m", ms}).complete({"p"}); }),
            ErrorCode::BackendUnavailable);
  EXPECT_EQ(code_of([&] { HttpBackend({ts.url("/gw_timeout"), "m", ms}).complete({"p"}); }),
            ErrorCode::Timeout);
  EXPECT_EQ(code_of([&] { HttpBackend({ts.url("/nolp"), "m", ms}).complete(lp); }),
            ErrorCode::LogprobsUnsupported);
  EXPECT_EQ(HttpBackend({ts.url("/nolp"), "m", ms}).complete({"p"}).text, "Yes");
  EXPECT_EQ(code_of([&] { HttpBackend({ts.url("/slow"), "m", ms}).complete({"p"}); }),
            ErrorCode::Timeout);
}

TEST(HttpBackend, UnreachableServerIsUnavailable) {
  TestServer ts;
  ts.start();
  const auto url = ts.url("/x");
  ts.server.stop();
  ts.thread.join();
  EXPECT_EQ(code_of([&] {
              HttpBackend({url, "m", std::chrono::milliseconds(500)}).complete({"p"});
            }),
            ErrorCode::BackendUnavailable);
}

TEST(HttpEncoder, EncodesBatchesAndChecksDim) {
  TestServer ts;
  ts.server.Post("/encode", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    json vectors = json::array();
    for (const auto& t : body["texts"]) {
      const auto n = static_cast<float>(t.get<std::string>().size());
      vectors.push_back({n, 1.0f, 0.0f});
    }
    res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
  });
  ts.server.Post("/wrong", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[[1,2]]})", "application/json");
  });
  ts.start();
  HttpEncoder enc({ts.url("/encode"), std::chrono::milliseconds(2000), 0});
  EXPECT_EQ(enc.dim(), 0);
  const std::vector<std::string> texts{"ab", "abcd"};
  const auto out = enc.encode(texts);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1][0], 4.0f);
  EXPECT_EQ(enc.dim(), 3);

  HttpEncoder strict({ts.url("/wrong"), std::chrono::milliseconds(2000), 3});
  EXPECT_EQ(code_of([&] { strict.encode_one("x"); }), ErrorCode::DimMismatch);
}
