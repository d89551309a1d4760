#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "rede/error.hpp"
#include "rede/eval.hpp"
#include "rede/parallel.hpp"
#include "rede/pipeline.hpp"
#include "rede/query_update.hpp"

using namespace rede;
using rede::test::ids_of;

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

rede::test::Fixture fruit() {
  std::vector<Document> docs{
      {"d01", "", "apple pie recipe with fresh apple"},
      {"d02", "", "apple orchard harvest season"},
      {"d03", "", "banana bread baking guide"},
      {"d04", "", "banana smoothie with yogurt"},
      {"d05", "", "cherry blossom festival in spring"},
      {"d06", "", "cherry jam and apple jam"},
      {"d07", "", "grape vine pruning"},
      {"d08", "", "grape juice fermentation"},
      {"d09", "", "lemon tart with meringue"},
      {"d10", "", "lemon water health claims"},
  };
  QuerySet queries{{"q1", "apple recipe"}, {"q2", "banana baking"}, {"q3", "lemon health"},
                   {"q4", "grape"}};
  Qrels qrels{{"q1", {{"d01", 1}, {"d06", 1}}},
              {"q2", {{"d03", 2}}},
              {"q3", {{"d05", 1}}},  // nothing the first stage will surface
              {"q4", {{"d08", 1}}}};
  return rede::test::hashed_fixture(std::move(docs), std::move(queries), 32, std::move(qrels));
}

std::unique_ptr<LlmGateway> generator(const std::string& text = "apple pie with apple") {
  return std::make_unique<LlmGateway>(
      MockBackend::from_json(R"([{"match_substring":"","text":")" + text + R"("}])"),
      GatewayOptions{0, std::chrono::milliseconds(1), 4});
}

PipelineConfig small_config(std::size_t k = 4) {
  PipelineConfig c;
  c.k_initial = k;
  c.output_depth = 10;
  return c;
}

}  // namespace

TEST(Pipeline, MethodNamesRoundTrip) {
  for (auto m : {Method::Bm25, Method::Dense, Method::Hybrid, Method::AvgPrf, Method::Hyde,
                 Method::HydePrf, Method::Rede, Method::RedeHydeDefault, Method::Rerank}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_method("hyde-prf"), Method::HydePrf);
  EXPECT_EQ(parse_default_policy("hyde_prf"), DefaultPolicy::HydePrf);
  EXPECT_THROW(parse_method("colbert"), Error);
}

TEST(Pipeline, ConfigValidation) {
  auto f = fruit();
  PipelineConfig c = small_config();
  c.max_kstar = 5;
  EXPECT_EQ(code_of([&] { SearchEngine(f.resources(), c); }), ErrorCode::InvalidConfig);
  c.max_kstar = 0;
  EXPECT_EQ(code_of([&] { SearchEngine(f.resources(), c); }), ErrorCode::InvalidConfig);
  c = small_config();
  c.k_initial = 0;
  EXPECT_EQ(code_of([&] { SearchEngine(f.resources(), c); }), ErrorCode::InvalidConfig);
}

TEST(Pipeline, BaselinesMatchIndices) {
  auto f = fruit();
  const SearchEngine engine(f.resources(), small_config());
  const auto& q = f.queries[0];
  EXPECT_EQ(ids_of(engine.search(Method::Bm25, q).ranking), ids_of(f.sparse.search(q.text, 10)));
  EXPECT_EQ(ids_of(engine.search(Method::Dense, q).ranking),
            ids_of(f.dense.search(f.encoder->encode_one(q.text), 10)));
  const auto hybrid = engine.search(Method::Hybrid, q);
  EXPECT_EQ(hybrid.ranking.query_id, "q1");
  EXPECT_TRUE(is_well_formed(hybrid.ranking));
}

TEST(Pipeline, RedeAveragesJudgedRelevantDocs) {
  auto f = fruit();
  OracleJudge judge(f.qrels);
  const SearchEngine engine(f.resources(nullptr, &judge), small_config());
  const auto r = engine.search(Method::Rede, f.queries[0]);
  const auto& t = r.trace;
  EXPECT_EQ(t.path_taken, PathTaken::Rede);
  EXPECT_EQ(t.judge_calls, t.candidates.size());
  EXPECT_EQ(t.generation_calls, 0u);
  ASSERT_GE(t.kstar, 1u);
  for (const auto& id : t.feedback_doc_ids) EXPECT_GT(f.qrels.at("q1").at(id), 0);

  std::vector<Vector> rel;
  for (const auto& id : t.feedback_doc_ids) rel.push_back(f.dense.fetch(id));
  const Vector expected = rede_update(t.query_vector, std::span<const Vector>(rel));
  ASSERT_TRUE(t.refined_vector);
  EXPECT_LE((*t.refined_vector - expected).cwiseAbs().maxCoeff(), 1e-7f);
  EXPECT_EQ(ids_of(r.ranking), ids_of(f.dense.search(*t.refined_vector, 10)));
}

TEST(Pipeline, MaxKstarCapsFeedback) {
  auto f = fruit();
  LexicalJudge judge(0.0);
  PipelineConfig c = small_config();
  c.max_kstar = 2;
  const SearchEngine engine(f.resources(nullptr, &judge), c);
  const auto r = engine.search(Method::Rede, f.queries[0]);
  EXPECT_EQ(r.trace.kstar, 2u);
  EXPECT_EQ(r.trace.feedback_doc_ids,
            (std::vector<std::string>{r.trace.candidates.entries[0].doc_id,
                                      r.trace.candidates.entries[1].doc_id}));
}

TEST(Pipeline, EmptyRelevantSetDefaults) {
  auto f = fruit();
  OracleJudge judge(f.qrels);
  auto gw = generator();
  const auto& q = f.queries[2];

  auto c = small_config();
  const SearchEngine enc(f.resources(gw.get(), &judge), c);
  const auto a = enc.search(Method::Rede, q);
  ASSERT_EQ(a.trace.kstar, 0u);
  EXPECT_EQ(a.trace.path_taken, PathTaken::DefaultEncoder);
  EXPECT_EQ(ids_of(a.ranking), ids_of(enc.search(Method::Dense, q).ranking));
  EXPECT_EQ(gw->counters().generation, 0u);

  const auto b = enc.search(Method::RedeHydeDefault, q);
  EXPECT_EQ(b.trace.path_taken, PathTaken::DefaultHydePrf);
  EXPECT_EQ(b.trace.generation_calls, 8u);
  EXPECT_EQ(b.trace.context_fetches, b.trace.candidates.size());
  const auto h = enc.search(Method::HydePrf, q);
  EXPECT_EQ(b.ranking.entries, h.ranking.entries);

  c.default_policy = DefaultPolicy::None;
  const SearchEngine none(f.resources(gw.get(), &judge), c);
  const auto n = none.search(Method::Rede, q);
  EXPECT_EQ(n.trace.path_taken, PathTaken::None);
  EXPECT_TRUE(n.ranking.entries.empty());
}

TEST(Pipeline, JudgeOutageFallsBackToDefault) {
  auto f = fruit();
  LlmGateway gw(MockBackend::from_json(
                    R"([{"match_substring":"","text":"?","first_token_logprobs":{"x":-1}}])"),
                {0, std::chrono::milliseconds(1), 2});
  LlmJudge judge(gw, {});
  const SearchEngine engine(f.resources(&gw, &judge), small_config());
  const auto r = engine.search(Method::Rede, f.queries[0]);
  EXPECT_EQ(r.trace.path_taken, PathTaken::DefaultEncoder);
  EXPECT_EQ(r.trace.skipped.size(), r.trace.candidates.size());
  EXPECT_FALSE(r.trace.warnings.empty());
}

TEST(Pipeline, HydeUsesGeneratedText) {
  auto f = fruit();
  auto gw = generator("banana bread");
  HydeConfig h;
  h.n_samples = 3;
  const SearchEngine engine(f.resources(gw.get()), small_config(), {}, h);
  const auto r = engine.search(Method::Hyde, f.queries[0]);
  EXPECT_EQ(r.trace.generation_calls, 3u);
  EXPECT_EQ(r.trace.judge_calls, 0u);
  EXPECT_EQ(r.trace.hypothetical_docs.size(), 3u);
  EXPECT_TRUE(r.trace.candidates.entries.empty());
  const Vector fq = f.encoder->encode_one("apple recipe");
  const Vector ft = f.encoder->encode_one("banana bread");
  const Vector expected = (fq + 3.0f * ft) / 4.0f;
  EXPECT_LE((*r.trace.refined_vector - expected).cwiseAbs().maxCoeff(), 1e-6f);
  EXPECT_EQ(gw->counters().generation, 3u);
}

TEST(Pipeline, AvgPrfUsesEveryCandidate) {
  auto f = fruit();
  const SearchEngine engine(f.resources(), small_config(3));
  const auto r = engine.search(Method::AvgPrf, f.queries[1]);
  EXPECT_EQ(r.trace.feedback_doc_ids, ids_of(r.trace.candidates));
  EXPECT_EQ(r.trace.feedback_doc_ids.size(), 3u);
}

TEST(Pipeline, RerankOrdersByJudgeProbability) {
  auto f = fruit();
  OracleJudge judge(f.qrels);
  const SearchEngine engine(f.resources(nullptr, &judge), small_config());
  const auto r = engine.search(Method::Rerank, f.queries[0]);
  ASSERT_EQ(r.ranking.entries.size(), r.trace.candidates.size());
  bool seen_zero = false;
  for (const auto& e : r.ranking.entries) {
    if (e.score == 0.0) seen_zero = true;
    if (seen_zero) {
      EXPECT_EQ(e.score, 0.0);
    }
  }
  EXPECT_THROW(rerank_by_judge({"q", {{"a", 1}}}, {}), Error);
}

TEST(Pipeline, MissingBackendsAreConfigErrors) {
  auto f = fruit();
  const SearchEngine engine(f.resources(), small_config());
  EXPECT_EQ(code_of([&] { engine.search(Method::Rede, f.queries[0]); }),
            ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { engine.search(Method::Hyde, f.queries[0]); }),
            ErrorCode::InvalidConfig);
}

TEST(Pipeline, EncoderDimMustMatchIndex) {
  auto f = fruit();
  f.encoder = std::make_unique<HashingEncoder>(16);
  const SearchEngine engine(f.resources(), small_config());
  EXPECT_EQ(code_of([&] { engine.search(Method::Dense, f.queries[0]); }),
            ErrorCode::DimMismatch);
}

TEST(Pipeline, ConcurrentQueriesMatchSequential) {
  auto f = fruit();
  OracleJudge judge(f.qrels);
  auto gw = generator();
  const SearchEngine engine(f.resources(gw.get(), &judge), small_config());
  for (auto m : {Method::Rede, Method::HydePrf, Method::Hybrid}) {
    std::vector<RankedList> seq, par(f.queries.size());
    for (const auto& q : f.queries) seq.push_back(engine.search(m, q).ranking);
    parallel_for(f.queries.size(), 4,
                 [&](std::size_t i) { par[i] = engine.search(m, f.queries[i]).ranking; });
    for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq[i].entries, par[i].entries);
  }
}

TEST(Pipeline, TraceCountsMatchGatewayCounters) {
  auto f = fruit();
  LlmGateway gw(MockBackend::from_json(R"([
    {"match_substring":"Passage:","text":"apple"},
    {"match_substring":"","text":"1","first_token_logprobs":{"1":-0.1,"0":-3}}
  ])"),
                {0, std::chrono::milliseconds(1), 4});
  LlmJudge judge(gw, {});
  const SearchEngine engine(f.resources(&gw, &judge), small_config());
  std::uint64_t judge_calls = 0, gen_calls = 0;
  for (auto m : {Method::Rede, Method::HydePrf, Method::Hyde, Method::Rerank}) {
    for (const auto& q : f.queries) {
      const auto r = engine.search(m, q);
      judge_calls += r.trace.judge_calls;
      gen_calls += r.trace.generation_calls;
    }
  }
  EXPECT_EQ(gw.counters().judge, judge_calls);
  EXPECT_EQ(gw.counters().generation, gen_calls);
}

TEST(Distill, ExportSkipsEmptyFeedbackAndRoundTrips) {
  auto f = fruit();
  OracleJudge judge(f.qrels);
  const SearchEngine engine(f.resources(nullptr, &judge), small_config());
  rede::test::TempDir dir;
  std::vector<SearchTrace> traces;
  const auto n = export_distill_dataset(engine, f.queries, dir / "d.jsonl", &traces);
  std::size_t expected = 0;
  for (const auto& t : traces) expected += t.kstar > 0 ? 1 : 0;
  EXPECT_EQ(n, expected);
  EXPECT_LT(n, f.queries.size());
  const auto records = load_distill_dataset(dir / "d.jsonl");
  ASSERT_EQ(records.size(), n);
  for (const auto& rec : records) {
    const auto it = std::find_if(traces.begin(), traces.end(),
                                 [&](const auto& t) { return t.query_id == rec.query_id; });
    ASSERT_NE(it, traces.end());
    EXPECT_EQ(rec.target, *it->refined_vector);
  }

  EXPECT_EQ(export_distill_dataset(engine, {}, dir / "empty.jsonl"), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "empty.jsonl"));
  EXPECT_EQ(std::filesystem::file_size(dir / "empty.jsonl"), 0u);
}
