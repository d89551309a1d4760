#include "cli.hpp"

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rede/error.hpp"
#include "rede/eval.hpp"
#include "rede/parallel.hpp"
#include "run_config.hpp"

namespace rede::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config;
  std::optional<std::size_t> k_initial;
  std::optional<std::size_t> max_kstar;
  std::optional<double> alpha;
  std::optional<std::string> default_policy;
  std::optional<std::string> judge;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON run config")->required();
    app->add_option("--k-initial", k_initial, "Candidates judged per query");
    app->add_option("--max-kstar", max_kstar, "Cap on feedback documents");
    app->add_option("--alpha", alpha, "Sparse weight in hybrid fusion");
    app->add_option("--default-policy", default_policy,
                    "encoder_only | hyde_prf | none");
    app->add_option("--judge", judge, "llm | oracle | lexical");
    app->add_option("--seed", seed, "Generation seed");
  }

  RunConfig load() const {
    auto c = RunConfig::load(config);
    c.apply_environment();
    if (k_initial) c.pipeline.k_initial = *k_initial;
    if (max_kstar) c.pipeline.max_kstar = *max_kstar;
    if (alpha) c.fusion.alpha = *alpha;
    if (default_policy) c.pipeline.default_policy = parse_default_policy(*default_policy);
    if (judge) c.judge.type = *judge;
    if (seed) {
      c.seed = *seed;
      c.hyde.seed = *seed;
    }
    return c;
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  if (!out.flush()) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

QuerySet read_queries(const RunConfig& config, const fs::path& path) {
  return load_queries(path, infer_format(path, config.queries_format));
}

void write_json(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  auto file = open_out(path);
  file << doc.dump(2) << '\n';
  finish(file, path);
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-shot dense retrieval with LLM relevance feedback", "rede"};
  app.require_subcommand(1);

  // index-sparse
  auto* index_cmd = app.add_subcommand("index-sparse", "Build and save a BM25 index");
  std::string idx_corpus, idx_out, idx_format = "jsonl";
  Bm25Params idx_params;
  index_cmd->add_option("--corpus", idx_corpus, "Corpus file")->required();
  index_cmd->add_option("--format", idx_format, "jsonl | tsv");
  index_cmd->add_option("--out", idx_out, "Index output path")->required();
  index_cmd->add_option("--k1", idx_params.k1, "BM25 k1");
  index_cmd->add_option("--b", idx_params.b, "BM25 b");

  // ingest-dense
  auto* ingest_cmd = app.add_subcommand(
      "ingest-dense", "Validate a precomputed embedding store, or encode a corpus into one");
  std::string ing_vectors, ing_manifest, ing_corpus, ing_format = "jsonl", ing_ids = "ids.txt";
  Eigen::Index ing_dim = 64;
  ingest_cmd->add_option("--vectors", ing_vectors, "Raw float32 vectors file")->required();
  ingest_cmd->add_option("--manifest", ing_manifest, "JSON manifest")->required();
  ingest_cmd->add_option("--corpus", ing_corpus, "Encode this corpus with the hashing encoder");
  ingest_cmd->add_option("--format", ing_format, "Corpus format: jsonl | tsv");
  ingest_cmd->add_option("--dim", ing_dim, "Hashing encoder dimension");
  ingest_cmd->add_option("--id-file", ing_ids, "Id file name, placed next to the manifest");

  // search
  auto* search_cmd = app.add_subcommand("search", "Retrieve for a query set");
  ConfigFlags search_flags;
  std::string search_method, search_queries, search_out, search_tag = "rede", search_trace;
  int search_parallel = 1;
  search_flags.attach(search_cmd);
  search_cmd->add_option("--method", search_method, "Retrieval method")->required();
  search_cmd->add_option("--queries", search_queries, "Queries file")->required();
  search_cmd->add_option("--out", search_out, "TREC run output")->required();
  search_cmd->add_option("--tag", search_tag, "Run tag");
  search_cmd->add_option("--trace", search_trace, "Per-query JSONL trace output");
  search_cmd->add_option("--parallel", search_parallel, "Queries in flight")
      ->check(CLI::PositiveNumber);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a run file with NDCG@k");
  std::string eval_run, eval_qrels, eval_out, eval_gain = "linear";
  std::size_t eval_k = 10;
  eval_cmd->add_option("--run", eval_run, "TREC run file")->required();
  eval_cmd->add_option("--qrels", eval_qrels, "TREC qrels file")->required();
  eval_cmd->add_option("--k", eval_k, "Cutoff")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--gain", eval_gain, "linear | exponential")
      ->check(CLI::IsMember({"linear", "exponential"}));
  eval_cmd->add_option("--out", eval_out, "JSON report (stdout when omitted)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Per-query latency and LLM call counts");
  ConfigFlags bench_flags;
  std::string bench_method, bench_queries, bench_out;
  std::size_t bench_warmup = 0;
  bench_flags.attach(bench_cmd);
  bench_cmd->add_option("--method", bench_method, "Retrieval method")->required();
  bench_cmd->add_option("--queries", bench_queries, "Queries file")->required();
  bench_cmd->add_option("--warmup", bench_warmup, "Leading queries excluded from stats");
  bench_cmd->add_option("--out", bench_out, "JSON report (stdout when omitted)");

  // export-distill
  auto* distill_cmd = app.add_subcommand("export-distill",
                                         "Write refined query embeddings as training targets");
  ConfigFlags distill_flags;
  std::string distill_queries, distill_out, distill_trace;
  distill_flags.attach(distill_cmd);
  distill_cmd->add_option("--queries", distill_queries, "Queries file")->required();
  distill_cmd->add_option("--out", distill_out, "JSONL output")->required();
  distill_cmd->add_option("--trace", distill_trace, "Per-query JSONL trace output");

  // judge
  auto* judge_cmd = app.add_subcommand("judge", "Judge first-stage candidates only");
  ConfigFlags judge_flags;
  std::string judge_queries, judge_out;
  judge_flags.attach(judge_cmd);
  judge_cmd->add_option("--queries", judge_queries, "Queries file")->required();
  judge_cmd->add_option("--out", judge_out, "JSONL judgments output")->required();

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    err << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*index_cmd) {
      const auto corpus = load_corpus(idx_corpus, parse_record_format(idx_format));
      const auto index = SparseIndex::build(corpus, idx_params);
      index.save(idx_out);
      out << json{{"docs", index.doc_count()}, {"avgdl", index.avg_doc_length()}}.dump() << '\n';
      return 0;
    }

    if (*ingest_cmd) {
      if (!ing_corpus.empty()) {
        const auto corpus = load_corpus(ing_corpus, parse_record_format(ing_format));
        std::vector<std::string> ids, texts;
        for (const auto& [id, doc] : corpus.documents()) {
          ids.push_back(id);
          texts.push_back(doc.contents());
        }
        const HashingEncoder encoder(ing_dim);
        const auto vecs = encoder.encode(texts);
        RowMatrix m(static_cast<Eigen::Index>(vecs.size()), ing_dim);
        for (std::size_t i = 0; i < vecs.size(); ++i) {
          m.row(static_cast<Eigen::Index>(i)) = vecs[i].transpose();
        }
        DenseIndex(std::move(ids), std::move(m)).save(ing_vectors, ing_manifest, ing_ids);
      }
      const auto index = DenseIndex::ingest(ing_vectors, ing_manifest);
      out << json{{"count", index.size()}, {"dim", index.dim()}}.dump() << '\n';
      return 0;
    }

    if (*search_cmd) {
      const auto method = parse_method(search_method);
      const auto config = search_flags.load();
      const auto rt = Runtime::open(config);
      const auto queries = read_queries(config, search_queries);
      std::vector<SearchResult> results(queries.size());
      parallel_for(queries.size(), search_parallel, [&](std::size_t i) {
        results[i] = rt->engine->search(method, queries[i]);
      });
      std::vector<RankedList> run;
      run.reserve(results.size());
      for (const auto& r : results) run.push_back(r.ranking);
      write_run_file(search_out, run, search_tag);
      if (!search_trace.empty()) {
        auto trace = open_out(search_trace);
        for (const auto& r : results) trace << to_json(r.trace).dump() << '\n';
        finish(trace, search_trace);
      }
      return 0;
    }

    if (*eval_cmd) {
      const auto run = load_run_file(eval_run);
      const auto qrels = load_qrels(eval_qrels);
      const auto report = evaluate_run(
          run, qrels, eval_k, eval_gain == "exponential" ? Gain::Exponential : Gain::Linear);
      write_json(to_json(report), eval_out, out);
      return 0;
    }

    if (*bench_cmd) {
      const auto method = parse_method(bench_method);
      const auto config = bench_flags.load();
      const auto rt = Runtime::open(config);
      const auto queries = read_queries(config, bench_queries);
      if (rt->gateway) rt->gateway->reset_counters();
      const auto report = measure_latency(
          [&](const Query& q) { return rt->engine->search(method, q); }, queries,
          bench_warmup);
      auto doc = to_json(report);
      doc["method"] = to_string(method);
      doc["warmup"] = bench_warmup;
      write_json(doc, bench_out, out);
      return 0;
    }

    if (*distill_cmd) {
      const auto config = distill_flags.load();
      const auto rt = Runtime::open(config);
      const auto queries = read_queries(config, distill_queries);
      std::vector<SearchTrace> traces;
      const auto written = export_distill_dataset(*rt->engine, queries, distill_out,
                                                  distill_trace.empty() ? nullptr : &traces);
      if (!distill_trace.empty()) {
        auto trace = open_out(distill_trace);
        for (const auto& t : traces) trace << to_json(t).dump() << '\n';
        finish(trace, distill_trace);
      }
      out << json{{"queries", queries.size()}, {"written", written}}.dump() << '\n';
      return 0;
    }

    if (*judge_cmd) {
      const auto config = judge_flags.load();
      const auto rt = Runtime::open(config);
      if (!rt->judge) throw Error(ErrorCode::InvalidConfig, "config has no judge section");
      const auto queries = read_queries(config, judge_queries);
      auto file = open_out(judge_out);
      for (const auto& q : queries) {
        const auto qvec = rt->encoder->encode_one(q.text);
        const auto candidates =
            rt->engine->initial_retrieval(q, qvec, config.pipeline.k_initial);
        const auto outcome = judge_candidates(*rt->judge, q, candidates, rt->corpus,
                                              config.pipeline.judge_parallelism);
        for (const auto& j : outcome.judgments) {
          file << json{{"query_id", j.query_id},
                       {"doc_id", j.doc_id},
                       {"p_relevant", j.p_relevant},
                       {"label", j.label}}
                      .dump()
               << '\n';
        }
        for (const auto& id : outcome.skipped) {
          file << json{{"query_id", q.query_id}, {"doc_id", id}, {"skipped", true}}.dump()
               << '\n';
        }
      }
      finish(file, judge_out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace rede::cli
