#include "rede/sparse_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rede/error.hpp"

namespace rede {

namespace {

constexpr char kMagic[8] = {'R', 'D', 'B', 'M', '2', '5', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "sparse index serialization assumes a little-endian host");

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <typename T>
  void pod(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T pod() {
    T value{};
    if (!in_.read(reinterpret_cast<char*>(&value), sizeof(T))) fail();
    return value;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    if (n > 0 && !in_.read(s.data(), n)) fail();
    return s;
  }
  [[noreturn]] void fail() const {
    throw Error(ErrorCode::SizeMismatch,
                "truncated sparse index file '" + path_ + "'");
  }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace

SparseIndex SparseIndex::build(const Corpus& corpus, Bm25Params params) {
  if (params.k1 < 0 || params.b < 0 || params.b > 1) {
    throw Error(ErrorCode::InvalidConfig, "BM25 needs k1 >= 0 and 0 <= b <= 1");
  }
  SparseIndex index;
  index.params_ = params;
  index.doc_ids_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());

  std::uint64_t total_length = 0;
  std::unordered_map<std::string, std::uint32_t> tf;
  for (const auto& [id, doc] : corpus.documents()) {
    const auto row = static_cast<std::uint32_t>(index.doc_ids_.size());
    const auto tokens = tokenize(doc.contents());
    tf.clear();
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) {
      index.postings_[term].push_back({row, count});
    }
    index.doc_ids_.push_back(id);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_length += tokens.size();
  }
  if (total_length == 0) {
    throw Error(ErrorCode::EmptyCorpus,
                corpus.empty() ? "corpus has no documents"
                               : "no document produced a token");
  }
  index.avg_doc_length_ =
      std::max(static_cast<double>(total_length) /
                   static_cast<double>(index.doc_ids_.size()),
               1e-9);
  return index;
}

double SparseIndex::idf(std::string_view term) const {
  const auto* list = postings(term);
  const double n = static_cast<double>(doc_ids_.size());
  const double df = list ? static_cast<double>(list->size()) : 0.0;
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double SparseIndex::term_weight(double idf, std::uint32_t tf,
                                std::uint32_t dl) const {
  const double f = static_cast<double>(tf);
  const double norm =
      params_.k1 * (1.0 - params_.b +
                    params_.b * static_cast<double>(dl) / avg_doc_length_);
  return idf * f * (params_.k1 + 1.0) / (f + norm);
}

std::uint32_t SparseIndex::row_of(std::string_view doc_id) const {
  auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
  if (it == doc_ids_.end() || *it != doc_id) {
    throw Error(ErrorCode::UnknownDocId, std::string(doc_id));
  }
  return static_cast<std::uint32_t>(it - doc_ids_.begin());
}

std::uint32_t SparseIndex::doc_length(std::string_view doc_id) const {
  return doc_lengths_[row_of(doc_id)];
}

const std::vector<Posting>* SparseIndex::postings(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? nullptr : &it->second;
}

double SparseIndex::score(std::span<const std::string> query_tokens,
                          std::string_view doc_id) const {
  const auto row = row_of(doc_id);
  double total = 0.0;
  for (const auto& term : query_tokens) {
    const auto* list = postings(term);
    if (!list) continue;
    auto it = std::lower_bound(
        list->begin(), list->end(), row,
        [](const Posting& p, std::uint32_t r) { return p.doc < r; });
    if (it == list->end() || it->doc != row) continue;
    total += term_weight(idf(term), it->tf, doc_lengths_[row]);
  }
  return total;
}

RankedList SparseIndex::search(std::string_view query_text,
                               std::size_t k) const {
  const auto tokens = tokenize(query_text);
  return search_tokens(tokens, k);
}

RankedList SparseIndex::search_tokens(std::span<const std::string> query_tokens,
                                      std::size_t k) const {
  if (k == 0) {
    throw Error(ErrorCode::PreconditionViolation, "search depth must be >= 1");
  }
  std::vector<double> acc(doc_ids_.size(), 0.0);
  std::vector<std::uint32_t> touched;
  // Same per-document summation order as score(), so both agree bit for bit.
  for (const auto& term : query_tokens) {
    const auto* list = postings(term);
    if (!list) continue;
    const double w_idf = idf(term);
    for (const auto& p : *list) {
      if (acc[p.doc] == 0.0) touched.push_back(p.doc);
      acc[p.doc] += term_weight(w_idf, p.tf, doc_lengths_[p.doc]);
    }
  }
  std::erase_if(touched, [&](std::uint32_t r) { return !(acc[r] > 0.0); });
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  // Rows are in ascending doc_id order, so row order is the tie-break.
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (acc[a] != acc[b]) return acc[a] > acc[b];
    return a < b;
  };
  const auto take = std::min(k, touched.size());
  std::partial_sort(touched.begin(), touched.begin() + take, touched.end(),
                    better);
  RankedList out;
  out.entries.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.entries.push_back({doc_ids_[touched[i]], acc[touched[i]]});
  }
  return out;
}

void SparseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  }
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.pod(params_.k1);
  w.pod(params_.b);
  w.pod(static_cast<std::uint32_t>(doc_ids_.size()));
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    w.str(doc_ids_[i]);
    w.pod(doc_lengths_[i]);
  }
  std::vector<const std::string*> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, _] : postings_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  w.pod(static_cast<std::uint32_t>(terms.size()));
  for (const auto* term : terms) {
    const auto& list = postings_.at(*term);
    w.str(*term);
    w.pod(static_cast<std::uint32_t>(list.size()));
    for (const auto& p : list) {
      w.pod(p.doc);
      w.pod(p.tf);
    }
  }
  if (!out.flush()) {
    throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
  }
}

SparseIndex SparseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  }
  Reader r(in, path.string());
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::MalformedRecord,
                "'" + path.string() + "' is not a sparse index file");
  }
  if (const auto version = r.pod<std::uint32_t>(); version != kVersion) {
    throw Error(ErrorCode::MalformedRecord,
                "unsupported sparse index version " + std::to_string(version));
  }
  SparseIndex index;
  index.params_.k1 = r.pod<double>();
  index.params_.b = r.pod<double>();
  const auto docs = r.pod<std::uint32_t>();
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < docs; ++i) {
    index.doc_ids_.push_back(r.str());
    index.doc_lengths_.push_back(r.pod<std::uint32_t>());
    total += index.doc_lengths_.back();
  }
  if (!std::is_sorted(index.doc_ids_.begin(), index.doc_ids_.end())) {
    throw Error(ErrorCode::MalformedRecord, "doc ids out of order");
  }
  const auto terms = r.pod<std::uint32_t>();
  for (std::uint32_t t = 0; t < terms; ++t) {
    auto term = r.str();
    const auto n = r.pod<std::uint32_t>();
    std::vector<Posting> list(n);
    for (auto& p : list) {
      p.doc = r.pod<std::uint32_t>();
      p.tf = r.pod<std::uint32_t>();
      if (p.doc >= docs) {
        throw Error(ErrorCode::MalformedRecord, "posting row out of range");
      }
    }
    index.postings_.emplace(std::move(term), std::move(list));
  }
  if (docs == 0 || total == 0) {
    throw Error(ErrorCode::EmptyCorpus, "sparse index has no tokens");
  }
  index.avg_doc_length_ = std::max(
      static_cast<double>(total) / static_cast<double>(docs), 1e-9);
  return index;
}

}  // namespace rede
