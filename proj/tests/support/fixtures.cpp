#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include "rede/error.hpp"

namespace rede::test {

namespace fs = std::filesystem;

std::vector<Vector> LookupEncoder::encode(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    auto it = table_.find(t);
    if (it == table_.end()) {
      throw Error(ErrorCode::PreconditionViolation, "no vector for text '" + t + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("rede_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Fixture hashed_fixture(std::vector<Document> docs, QuerySet queries, Eigen::Index dim,
                       Qrels qrels) {
  Fixture f;
  f.corpus = Corpus(std::move(docs));
  f.sparse = SparseIndex::build(f.corpus);
  f.encoder = std::make_unique<HashingEncoder>(dim);
  std::vector<std::string> ids, texts;
  for (const auto& [id, doc] : f.corpus.documents()) {
    ids.push_back(id);
    texts.push_back(doc.contents());
  }
  const auto vecs = f.encoder->encode(texts);
  RowMatrix m(static_cast<Eigen::Index>(vecs.size()), dim);
  for (std::size_t i = 0; i < vecs.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vecs[i];
  f.dense = DenseIndex(std::move(ids), std::move(m));
  f.queries = std::move(queries);
  f.qrels = std::move(qrels);
  return f;
}

Fixture synthetic_benchmark(std::uint64_t seed, BenchmarkShape shape) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int words_per_cluster = 12;
  const int filler_words = 40;

  std::vector<Eigen::VectorXd> centres;
  for (int c = 0; c < shape.clusters; ++c) {
    Eigen::VectorXd v(shape.dim);
    for (Eigen::Index i = 0; i < shape.dim; ++i) v[i] = gauss(rng);
    centres.push_back(v);
  }
  auto cluster_word = [&](int c) {
    return "t" + std::to_string(c) + "w" + std::to_string(rng() % words_per_cluster);
  };
  auto filler_word = [&] { return "f" + std::to_string(rng() % filler_words); };
  auto noisy = [&](int c, double sigma) {
    Eigen::VectorXd v = centres[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < shape.dim; ++i) v[i] += sigma * gauss(rng);
    return v;
  };

  Fixture f;
  std::vector<Document> docs;
  std::vector<int> doc_cluster;
  std::vector<std::string> ids;
  RowMatrix m(shape.docs, shape.dim);
  for (int d = 0; d < shape.docs; ++d) {
    const int c = d % shape.clusters;
    std::string text;
    for (int w = 0; w < 16; ++w) {
      if (!text.empty()) text += ' ';
      text += unit(rng) < 0.35 ? cluster_word(c) : filler_word();
    }
    char id[16];
    std::snprintf(id, sizeof(id), "d%03d", d);
    docs.push_back({id, "", text});
    ids.push_back(id);
    doc_cluster.push_back(c);
    m.row(d) = noisy(c, 0.9).cast<float>().transpose();
  }

  std::map<std::string, Vector> table;
  for (int q = 0; q < shape.queries; ++q) {
    const int c = q % shape.clusters;
    std::string text = "q" + std::to_string(q);
    for (int w = 0; w < 3; ++w) {
      text += ' ';
      text += unit(rng) < 0.4 ? cluster_word(c) : filler_word();
    }
    table[text] = noisy(c, 1.6).cast<float>();
    const auto qid = "q" + std::to_string(q);
    f.queries.push_back({qid, text});
    for (int d = 0; d < shape.docs; ++d) {
      if (doc_cluster[static_cast<std::size_t>(d)] == c) f.qrels[qid][ids[static_cast<std::size_t>(d)]] = 1;
    }
  }

  f.corpus = Corpus(std::move(docs));
  f.sparse = SparseIndex::build(f.corpus);
  f.dense = DenseIndex(std::move(ids), std::move(m));
  f.encoder = std::make_unique<LookupEncoder>(shape.dim, std::move(table));
  return f;
}

std::vector<Document> random_documents(std::mt19937_64& rng, int n_docs, int vocab,
                                       int max_len) {
  std::vector<Document> docs;
  for (int d = 0; d < n_docs; ++d) {
    const int len = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
    std::string text;
    for (int w = 0; w < len; ++w) {
      if (!text.empty()) text += ' ';
      text += "w" + std::to_string(rng() % static_cast<std::uint64_t>(vocab));
    }
    docs.push_back({"doc" + std::to_string(d), "", text});
  }
  return docs;
}

std::vector<std::string> brute_force_ranking(const DenseIndex& index,
                                             const Eigen::VectorXd& query) {
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : index.ids()) {
    const auto row = index.fetch(id);
    double s = 0.0;
    for (Eigen::Index i = 0; i < row.size(); ++i) s += static_cast<double>(row[i]) * query[i];
    scored.emplace_back(s, id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (const auto& [_, id] : scored) out.push_back(id);
  return out;
}

std::vector<std::string> ids_of(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& e : list.entries) out.push_back(e.doc_id);
  return out;
}

}  // namespace rede::test
