#include "rede/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "rede/error.hpp"

namespace rede {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  }
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// Accepts string or integer ids; BEIR dumps occasionally carry numeric ones.
std::string json_id(const json& record, std::size_t line_no) {
  auto it = record.find("_id");
  if (it == record.end()) it = record.find("id");
  if (it == record.end()) {
    throw Error(ErrorCode::MalformedRecord, "missing \"_id\"", line_no);
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw Error(ErrorCode::MalformedRecord, "\"_id\" must be a string", line_no);
}

std::string json_string_field(const json& record, const char* key,
                              std::size_t line_no, bool required) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) {
    if (required) {
      throw Error(ErrorCode::MalformedRecord,
                  std::string("missing \"") + key + "\"", line_no);
    }
    return {};
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                std::string("\"") + key + "\" must be a string", line_no);
  }
  return it->get<std::string>();
}

json parse_json_line(const std::string& line, std::size_t line_no) {
  json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (record.is_discarded() || !record.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "not a JSON object", line_no);
  }
  return record;
}

// Decodes one UTF-8 code point starting at text[i]; returns 0xFFFD and a
// length of 1 on invalid input.
char32_t decode_utf8(std::string_view text, std::size_t i, std::size_t& len) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    len = 1;
    return b0;
  }
  int need = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    len = 1;
    return 0xFFFD;
  }
  for (int k = 1; k <= need; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      len = 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  len = static_cast<std::size_t>(need) + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_word_codepoint(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
           (cp >= 'A' && cp <= 'Z');
  }
  if (cp == 0xFFFD) return false;
  if (cp <= 0xBF) {
    // Latin-1 controls, spaces and symbols; keep the letter/number signs.
    switch (cp) {
      case 0xAA: case 0xB2: case 0xB3: case 0xB5:
      case 0xB9: case 0xBA: case 0xBC: case 0xBD: case 0xBE:
        return true;
      default:
        return false;
    }
  }
  if (cp == 0xD7 || cp == 0xF7) return false;
  auto in = [cp](char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; };
  if (in(0x2000, 0x206F) || in(0x20A0, 0x20CF) || in(0x2E00, 0x2E7F) ||
      in(0x3000, 0x303F) || in(0xFE30, 0xFE4F) || in(0xFF00, 0xFF0F) ||
      in(0xFF1A, 0xFF20) || in(0xFF3B, 0xFF40) || in(0xFF5B, 0xFF65) ||
      cp == 0xFEFF) {
    return false;
  }
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

}  // namespace

RecordFormat parse_record_format(std::string_view name) {
  if (name == "jsonl") return RecordFormat::Jsonl;
  if (name == "tsv") return RecordFormat::Tsv;
  throw Error(ErrorCode::InvalidConfig,
              "unknown record format '" + std::string(name) + "'");
}

Corpus::Corpus(std::vector<Document> docs) {
  for (auto& doc : docs) {
    if (doc.doc_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "empty doc_id");
    }
    std::string id = doc.doc_id;
    if (!docs_.emplace(id, std::move(doc)).second) {
      throw Error(ErrorCode::DuplicateDocId, id);
    }
  }
}

bool Corpus::contains(std::string_view doc_id) const {
  return docs_.find(doc_id) != docs_.end();
}

const Document& Corpus::at(std::string_view doc_id) const {
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) {
    throw Error(ErrorCode::UnknownDocId, std::string(doc_id));
  }
  return it->second;
}

Corpus parse_corpus(std::istream& in, RecordFormat format) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    Document doc;
    if (format == RecordFormat::Jsonl) {
      const json record = parse_json_line(line, line_no);
      doc.doc_id = json_id(record, line_no);
      doc.title = json_string_field(record, "title", line_no, false);
      doc.text = json_string_field(record, "text", line_no, true);
    } else {
      auto cols = split_tabs(line);
      if (cols.size() == 2) {
        doc.doc_id = cols[0];
        doc.text = cols[1];
      } else if (cols.size() == 3) {
        doc.doc_id = cols[0];
        doc.title = cols[1];
        doc.text = cols[2];
      } else {
        throw Error(ErrorCode::MalformedRecord,
                    "expected 2 or 3 tab-separated columns", line_no);
      }
    }
    if (doc.doc_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "empty doc id", line_no);
    }
    if (!seen.insert(doc.doc_id).second) {
      throw Error(ErrorCode::DuplicateDocId, doc.doc_id, line_no);
    }
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path, RecordFormat format) {
  auto in = open_input(path);
  return parse_corpus(in, format);
}

QuerySet parse_queries(std::istream& in, RecordFormat format) {
  QuerySet queries;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    Query q;
    if (format == RecordFormat::Jsonl) {
      const json record = parse_json_line(line, line_no);
      q.query_id = json_id(record, line_no);
      q.text = json_string_field(record, "text", line_no, true);
    } else {
      auto cols = split_tabs(line);
      if (cols.size() != 2) {
        throw Error(ErrorCode::MalformedRecord,
                    "expected 2 tab-separated columns", line_no);
      }
      q.query_id = cols[0];
      q.text = cols[1];
    }
    if (q.query_id.empty()) {
      throw Error(ErrorCode::MalformedRecord, "empty query id", line_no);
    }
    if (is_blank(q.text)) {
      throw Error(ErrorCode::MalformedRecord,
                  "blank text for query '" + q.query_id + "'", line_no);
    }
    if (!seen.insert(q.query_id).second) {
      throw Error(ErrorCode::DuplicateQueryId, q.query_id, line_no);
    }
    queries.push_back(std::move(q));
  }
  return queries;
}

QuerySet load_queries(const std::filesystem::path& path, RecordFormat format) {
  auto in = open_input(path);
  return parse_queries(in, format);
}

Qrels parse_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string qid, iter, docid, rel_text, extra;
    if (!(fields >> qid >> iter >> docid >> rel_text) || (fields >> extra)) {
      throw Error(ErrorCode::MalformedRecord,
                  "expected 'qid iter docid rel'", line_no);
    }
    int rel = 0;
    const char* first = rel_text.data();
    const char* last = first + rel_text.size();
    auto [ptr, ec] = std::from_chars(first, last, rel);
    if (ec != std::errc() || ptr != last) {
      throw Error(ErrorCode::MalformedRecord,
                  "relevance '" + rel_text + "' is not an integer", line_no);
    }
    if (rel < 0) {
      throw Error(ErrorCode::NegativeRelevance,
                  qid + " " + docid + " " + rel_text, line_no);
    }
    if (!qrels[qid].emplace(docid, rel).second) {
      throw Error(ErrorCode::MalformedRecord,
                  "duplicate judgment for (" + qid + ", " + docid + ")",
                  line_no);
    }
  }
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_qrels(in);
}

void write_run(std::ostream& out, std::span<const RankedList> runs,
               std::string_view tag) {
  if (tag.empty() || tag.find_first_of(" \t\r\n") != std::string_view::npos) {
    throw Error(ErrorCode::PreconditionViolation,
                "run tag must be a non-empty token");
  }
  for (const auto& run : runs) require_well_formed(run);
  char score[64];
  for (const auto& run : runs) {
    std::size_t rank = 1;
    for (const auto& e : run.entries) {
      std::snprintf(score, sizeof(score), "%.6f", e.score);
      out << run.query_id << " Q0 " << e.doc_id << ' ' << rank++ << ' '
          << score << ' ' << tag << '\n';
    }
  }
}

void write_run_file(const std::filesystem::path& path,
                    std::span<const RankedList> runs, std::string_view tag) {
  // Validate before truncating an existing file.
  for (const auto& run : runs) require_well_formed(run);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  }
  write_run(out, runs, tag);
  if (!out.flush()) {
    throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
  }
}

std::vector<RankedList> parse_run(std::istream& in) {
  struct Row {
    long rank;
    ScoredDoc doc;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Row>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::string qid, q0, docid, tag;
    long rank = 0;
    double score = 0;
    if (!(fields >> qid >> q0 >> docid >> rank >> score >> tag)) {
      throw Error(ErrorCode::MalformedRecord,
                  "expected 'qid Q0 docid rank score tag'", line_no);
    }
    auto [it, inserted] = rows.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back({rank, {docid, score}});
  }
  std::vector<RankedList> runs;
  runs.reserve(order.size());
  for (const auto& qid : order) {
    auto& r = rows[qid];
    std::stable_sort(r.begin(), r.end(),
                     [](const Row& a, const Row& b) { return a.rank < b.rank; });
    RankedList list{qid, {}};
    list.entries.reserve(r.size());
    for (auto& row : r) list.entries.push_back(std::move(row.doc));
    runs.push_back(std::move(list));
  }
  return runs;
}

std::vector<RankedList> load_run_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_run(in);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = 1;
    const char32_t cp = decode_utf8(text, i, len);
    if (is_word_codepoint(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
    i += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string truncate_whitespace_tokens(std::string_view text,
                                       std::size_t max_tokens) {
  std::string out;
  std::size_t count = 0;
  std::size_t i = 0;
  constexpr std::string_view ws = " \t\r\n\f\v";
  while (count < max_tokens) {
    const auto start = text.find_first_not_of(ws, i);
    if (start == std::string_view::npos) break;
    auto end = text.find_first_of(ws, start);
    if (end == std::string_view::npos) end = text.size();
    if (!out.empty()) out.push_back(' ');
    out.append(text.substr(start, end - start));
    ++count;
    i = end;
  }
  return out;
}

}  // namespace rede
