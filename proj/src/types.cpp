#include "rede/types.hpp"

#include <algorithm>
#include <unordered_set>

#include "rede/error.hpp"

namespace rede {

std::string Document::contents() const {
  if (title.empty()) return text;
  return title + ". " + text;
}

bool is_well_formed(const RankedList& list) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < list.entries.size(); ++i) {
    const auto& e = list.entries[i];
    if (!seen.insert(e.doc_id).second) return false;
    if (i > 0 && e.score > list.entries[i - 1].score) return false;
  }
  return true;
}

void require_well_formed(const RankedList& list) {
  if (!is_well_formed(list)) {
    throw Error(ErrorCode::PreconditionViolation,
                "ranked list for query '" + list.query_id +
                    "' has increasing scores or repeated doc ids");
  }
}

void sort_ranked(std::vector<ScoredDoc>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const ScoredDoc& a, const ScoredDoc& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.doc_id < b.doc_id;
            });
}

}  // namespace rede
