#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rede/error.hpp"

namespace rede::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::InvalidConfig, message);
}

fs::path resolve(const fs::path& base, const json& node) {
  if (!node.is_string()) bad("path values must be strings");
  fs::path p = node.get<std::string>();
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    bad(std::string("config key '") + key + "' has the wrong type");
  }
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return empty;
  if (!it->is_object()) bad(std::string("config section '") + key + "' must be an object");
  return *it;
}

std::optional<std::string> read_optional_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

}  // namespace

RecordFormat infer_format(const fs::path& path, std::optional<RecordFormat> declared) {
  if (declared) return *declared;
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" ? RecordFormat::Jsonl : RecordFormat::Tsv;
}

RunConfig RunConfig::from_json(const json& doc, const fs::path& base) {
  if (!doc.is_object()) bad("config must be a JSON object");
  RunConfig c;
  if (auto it = doc.find("corpus"); it != doc.end()) c.corpus = resolve(base, *it);
  c.corpus_format = parse_record_format(get_or<std::string>(doc, "corpus_format", "jsonl"));
  if (auto it = doc.find("queries_format"); it != doc.end() && !it->is_null()) {
    c.queries_format = parse_record_format(it->get<std::string>());
  }
  if (auto it = doc.find("qrels"); it != doc.end()) c.qrels = resolve(base, *it);
  if (auto it = doc.find("sparse_index"); it != doc.end()) c.sparse_index = resolve(base, *it);
  if (auto it = doc.find("templates_dir"); it != doc.end()) c.templates_dir = resolve(base, *it);
  const auto& emb = section(doc, "embeddings");
  if (auto it = emb.find("vectors"); it != emb.end()) c.vectors = resolve(base, *it);
  if (auto it = emb.find("manifest"); it != emb.end()) c.manifest = resolve(base, *it);

  const auto& enc = section(doc, "encoder");
  c.encoder.type = get_or<std::string>(enc, "type", "hash");
  c.encoder.dim = get_or<Eigen::Index>(enc, "dim", 64);
  c.encoder.url = get_or<std::string>(enc, "url", "");
  c.encoder.timeout = std::chrono::milliseconds(get_or<long long>(enc, "timeout_ms", 30000));

  const auto& gw = section(doc, "gateway");
  c.gateway.type = get_or<std::string>(gw, "type", "");
  if (auto it = gw.find("script"); it != gw.end()) c.gateway.script = resolve(base, *it);
  c.gateway.url = get_or<std::string>(gw, "url", "");
  c.gateway.model = get_or<std::string>(gw, "model", "");
  c.gateway.timeout = std::chrono::milliseconds(get_or<long long>(gw, "timeout_ms", 60000));
  c.gateway.options.max_retries = get_or<int>(gw, "max_retries", 3);
  c.gateway.options.initial_backoff =
      std::chrono::milliseconds(get_or<long long>(gw, "backoff_ms", 100));
  c.gateway.options.parallelism = get_or<int>(gw, "parallelism", 4);

  const auto& judge = section(doc, "judge");
  c.judge.type = get_or<std::string>(judge, "type", "");
  c.judge.template_id = parse_judge_template(get_or<std::string>(judge, "template", "default"));
  c.judge.positive_token = get_or<std::string>(judge, "positive_token", "");
  c.judge.negative_token = get_or<std::string>(judge, "negative_token", "");
  c.judge.max_doc_tokens = get_or<std::size_t>(judge, "max_doc_tokens", 128);
  c.judge.top_logprobs = get_or<int>(judge, "top_logprobs", 20);
  c.judge.threshold = get_or<double>(judge, "threshold", 0.15);

  const auto& pl = section(doc, "pipeline");
  c.pipeline.initial_retriever =
      parse_initial_retriever(get_or<std::string>(pl, "initial_retriever", "hybrid"));
  c.pipeline.k_initial = get_or<std::size_t>(pl, "k_initial", 20);
  if (auto it = pl.find("max_kstar"); it != pl.end() && !it->is_null()) {
    c.pipeline.max_kstar = it->get<std::size_t>();
  }
  c.pipeline.default_policy =
      parse_default_policy(get_or<std::string>(pl, "default_policy", "encoder_only"));
  c.pipeline.output_depth = get_or<std::size_t>(pl, "output_depth", 1000);
  c.pipeline.similarity = parse_similarity(get_or<std::string>(pl, "similarity", "ip"));
  c.pipeline.judge_parallelism = get_or<int>(pl, "judge_parallelism", 1);

  const auto& fu = section(doc, "fusion");
  c.fusion.alpha = get_or<double>(fu, "alpha", 0.5);
  c.fusion.pool_depth = get_or<std::size_t>(fu, "pool_depth", 0);

  const auto& bm = section(doc, "bm25");
  c.bm25.k1 = get_or<double>(bm, "k1", 0.9);
  c.bm25.b = get_or<double>(bm, "b", 0.4);

  c.seed = get_or<std::uint64_t>(doc, "seed", 0);
  const auto& hy = section(doc, "hyde");
  c.hyde.n_samples = get_or<int>(hy, "n_samples", 8);
  c.hyde.temperature = get_or<double>(hy, "temperature", 0.7);
  c.hyde.max_new_tokens = get_or<int>(hy, "max_new_tokens", 512);
  c.hyde.task = parse_hyde_task(get_or<std::string>(hy, "task", "web_search"));
  c.hyde.context_docs = get_or<std::size_t>(hy, "context_docs", 0);
  c.hyde.context_doc_tokens = get_or<std::size_t>(hy, "context_doc_tokens", 128);
  c.hyde.seed = c.seed;
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file '" + path.string() + "'");
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) bad("config file '" + path.string() + "' is not valid JSON");
  return from_json(doc, path.parent_path());
}

void RunConfig::apply_environment() {
  if (const char* url = std::getenv("REDE_GATEWAY_URL"); url && *url) {
    gateway.type = "http";
    gateway.url = url;
  }
}

void RunConfig::validate_paths() const {
  auto need = [](const fs::path& p, const char* what) {
    if (p.empty()) bad(std::string("config is missing '") + what + "'");
    if (!fs::exists(p)) {
      bad(std::string(what) + " file not found: " + p.string());
    }
  };
  need(corpus, "corpus");
  need(vectors, "embeddings.vectors");
  need(manifest, "embeddings.manifest");
  if (!sparse_index.empty()) need(sparse_index, "sparse_index");
  if (!qrels.empty()) need(qrels, "qrels");
  if (gateway.type == "mock") need(gateway.script, "gateway.script");
  if (!templates_dir.empty() && !fs::is_directory(templates_dir)) {
    bad("templates_dir not found: " + templates_dir.string());
  }
}

std::unique_ptr<EncoderBackend> make_encoder(const EncoderSettings& s) {
  if (s.type == "hash") return std::make_unique<HashingEncoder>(s.dim);
  if (s.type == "http") {
    return std::make_unique<HttpEncoder>(HttpEncoderConfig{s.url, s.timeout, 0});
  }
  bad("unknown encoder type '" + s.type + "'");
}

std::unique_ptr<Runtime> Runtime::open(const RunConfig& config) {
  config.validate_paths();
  auto rt = std::make_unique<Runtime>();
  rt->corpus = load_corpus(config.corpus, config.corpus_format);
  rt->sparse = config.sparse_index.empty() ? SparseIndex::build(rt->corpus, config.bm25)
                                           : SparseIndex::load(config.sparse_index);
  rt->dense = DenseIndex::ingest(config.vectors, config.manifest);
  if (!config.qrels.empty()) rt->qrels = load_qrels(config.qrels);
  rt->encoder = make_encoder(config.encoder);

  if (config.gateway.type == "mock") {
    rt->gateway = std::make_unique<LlmGateway>(MockBackend::from_script(config.gateway.script),
                                               config.gateway.options);
  } else if (config.gateway.type == "http") {
    rt->gateway = std::make_unique<LlmGateway>(
        std::make_unique<HttpBackend>(
            HttpBackendConfig{config.gateway.url, config.gateway.model, config.gateway.timeout}),
        config.gateway.options);
  } else if (!config.gateway.type.empty()) {
    bad("unknown gateway type '" + config.gateway.type + "'");
  }

  const auto& js = config.judge;
  if (js.type == "llm") {
    if (!rt->gateway) bad("judge type 'llm' needs a gateway section");
    LlmJudgeConfig jc;
    jc.template_id = js.template_id;
    jc.positive_token = js.positive_token;
    jc.negative_token = js.negative_token;
    jc.max_doc_tokens = js.max_doc_tokens;
    jc.top_logprobs = js.top_logprobs;
    if (!config.templates_dir.empty()) {
      jc.template_text = read_optional_file(config.templates_dir / "judge" /
                                            (std::string(to_string(js.template_id)) + ".txt"));
    }
    rt->judge = std::make_unique<LlmJudge>(*rt->gateway, jc);
  } else if (js.type == "oracle") {
    if (config.qrels.empty()) bad("judge type 'oracle' needs qrels");
    rt->judge = std::make_unique<OracleJudge>(rt->qrels);
  } else if (js.type == "lexical") {
    rt->judge = std::make_unique<LexicalJudge>(js.threshold);
  } else if (!js.type.empty()) {
    bad("unknown judge type '" + js.type + "'");
  }

  EngineTemplates templates;
  if (!config.templates_dir.empty()) {
    const std::string task(to_string(config.hyde.task));
    templates.hyde_plain = read_optional_file(config.templates_dir / "hyde" / (task + ".txt"));
    templates.hyde_context =
        read_optional_file(config.templates_dir / "hyde" / (task + "_context.txt"));
  }
  rt->engine = std::make_unique<SearchEngine>(
      SearchResources{rt->corpus, rt->sparse, rt->dense, *rt->encoder, rt->gateway.get(),
                      rt->judge.get()},
      config.pipeline, config.fusion, config.hyde, std::move(templates));
  return rt;
}

}  // namespace rede::cli
