#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rede/error.hpp"
#include "rede/eval.hpp"

using namespace rede;

namespace {

RankedList ranked(const std::string& qid, std::vector<std::string> ids) {
  RankedList out{qid, {}};
  double s = static_cast<double>(ids.size());
  for (auto& id : ids) out.entries.push_back({std::move(id), s--});
  return out;
}

}  // namespace

TEST(Ndcg, HandValues) {
  const QueryQrels one{{"d1", 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked("q", {"d1", "d2"}), one, 10), 1.0);
  EXPECT_NEAR(ndcg_at_k(ranked("q", {"d2", "d1"}), one, 10), 1.0 / std::log2(3.0), 1e-12);
  EXPECT_EQ(ndcg_at_k(ranked("q", {"d1"}), QueryQrels{{"d1", 0}}, 10), 0.0);
  EXPECT_EQ(ndcg_at_k(ranked("q", {"d1"}), QueryQrels{}, 10), 0.0);
}

TEST(Ndcg, GradedAndExponentialGain) {
  const QueryQrels q{{"a", 2}, {"b", 1}};
  const auto r = ranked("q", {"b", "a"});
  const double lin = (1.0 + 2.0 / std::log2(3.0)) / (2.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(r, q, 10), lin, 1e-12);
  const double ex = (1.0 + 3.0 / std::log2(3.0)) / (3.0 + 1.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(r, q, 10, Gain::Exponential), ex, 1e-12);
}

TEST(Ndcg, CutoffTruncatesIdealToo) {
  const QueryQrels q{{"a", 1}, {"b", 1}, {"c", 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(ranked("q", {"a", "x"}), q, 1), 1.0);
  EXPECT_THROW(ndcg_at_k(ranked("q", {"a"}), q, 0), Error);
}

TEST(Ndcg, MatchesOracleAndInvariantBelowK) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::string> ids;
    for (int i = 0; i < 15; ++i) ids.push_back("d" + std::to_string(i));
    std::shuffle(ids.begin(), ids.end(), rng);
    QueryQrels q;
    for (int i = 0; i < 15; ++i) {
      if (rng() % 3 == 0) q["d" + std::to_string(i)] = static_cast<int>(rng() % 3);
    }
    const std::size_t k = 1 + rng() % 12;
    const double v = ndcg_at_k(ranked("q", ids), q, k);
    EXPECT_NEAR(v, rede::test::ndcg_oracle(ids, q, k), 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
    if (k < ids.size()) {
      std::shuffle(ids.begin() + static_cast<long>(k), ids.end(), rng);
      EXPECT_EQ(ndcg_at_k(ranked("q", ids), q, k), v);
    }
  }
}

TEST(EvaluateRun, MeanExcludesUnjudgedQueries) {
  Qrels qrels{{"q1", {{"d1", 1}}}, {"q2", {{"d9", 1}}}};
  std::vector<RankedList> run{ranked("q1", {"d1"}), ranked("q2", {"d1"}), ranked("q3", {"d1"})};
  const auto report = evaluate_run(run, qrels, 10);
  EXPECT_EQ(report.per_query.size(), 2u);
  EXPECT_DOUBLE_EQ(report.mean, 0.5);
  std::reverse(run.begin(), run.end());
  EXPECT_DOUBLE_EQ(evaluate_run(run, qrels, 10).mean, 0.5);
  try {
    evaluate_run({}, qrels, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRun);
  }
}

TEST(Latency, PercentilesOrdered) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(percentile({5}, 0.95), 5.0);
  std::mt19937_64 rng(1);
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(static_cast<double>(rng() % 1000));
  EXPECT_LE(percentile(xs, 0.5), percentile(xs, 0.95));
}

TEST(Latency, WarmupExcludedAndCountsSummed) {
  const QuerySet queries{{"a", "x"}, {"b", "y"}, {"c", "z"}};
  int calls = 0;
  const auto report = measure_latency(
      [&](const Query& q) {
        ++calls;
        SearchResult r;
        r.trace.query_id = q.query_id;
        r.trace.judge_calls = 20;
        r.trace.generation_calls = 1;
        return r;
      },
      queries, 1);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(report.query_ids, (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(report.judge_calls, 40u);
  EXPECT_EQ(report.generation_calls, 2u);
  EXPECT_LE(report.min_ms, report.p50_ms);
  EXPECT_LE(report.p50_ms, report.p95_ms);
  EXPECT_LE(report.p95_ms, report.max_ms);
}

TEST(Distill, FormatFloatRoundTrips) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(-10.f, 10.f);
  for (int i = 0; i < 1000; ++i) {
    const float x = u(rng);
    EXPECT_EQ(std::stof(format_float(x)), x);
  }
}
