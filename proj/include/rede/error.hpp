#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rede {

enum class ErrorCode {
  MalformedRecord,
  DuplicateDocId,
  DuplicateQueryId,
  NegativeRelevance,
  IoError,
  PreconditionViolation,
  EmptyCorpus,
  UnknownDocId,
  SizeMismatch,
  NonFiniteVector,
  DimMismatch,
  BackendUnavailable,
  LogprobsUnsupported,
  Timeout,
  UnknownTemplate,
  JudgeUnavailable,
  AllSamplesEmpty,
  EmptyRelevantSet,
  EmptyHypotheticalSet,
  MissingJudgment,
  EmptyRun,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `line()` is set for record-level
// parse errors (1-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace rede
