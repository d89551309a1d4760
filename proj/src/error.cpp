#include "rede/error.hpp"

namespace rede {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::DuplicateQueryId: return "DuplicateQueryId";
    case ErrorCode::NegativeRelevance: return "NegativeRelevance";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownDocId: return "UnknownDocId";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFiniteVector: return "NonFiniteVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::LogprobsUnsupported: return "LogprobsUnsupported";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::AllSamplesEmpty: return "AllSamplesEmpty";
    case ErrorCode::EmptyRelevantSet: return "EmptyRelevantSet";
    case ErrorCode::EmptyHypotheticalSet: return "EmptyHypotheticalSet";
    case ErrorCode::MissingJudgment: return "MissingJudgment";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)),
      code_(code),
      line_(line) {}

}  // namespace rede
