// SPDX-License-Identifier: Apache-2.0
#include "mind/error.hpp"

namespace mind {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateCueId: return "DuplicateCueId";
    case ErrorCode::EmptyExplicitCues: return "EmptyExplicitCues";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::UnknownCueId: return "UnknownCueId";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyState: return "EmptyState";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::EmptyHits: return "EmptyHits";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::BackendFingerprintMismatch: return "BackendFingerprintMismatch";
    case ErrorCode::InvalidEntry: return "InvalidEntry";
    case ErrorCode::EmptyDims: return "EmptyDims";
    case ErrorCode::UnknownEventKind: return "UnknownEventKind";
    case ErrorCode::MissingPrior: return "MissingPrior";
    case ErrorCode::Mismatch: return "Mismatch";
    case ErrorCode::NonFiniteLogits: return "NonFiniteLogits";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& subject, const std::string& detail) {
  std::string msg(to_string(code));
  if (!subject.empty()) msg += "(" + subject + ")";
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string subject, std::string detail)
    : std::runtime_error(compose(code, subject, detail)), code_(code), subject_(std::move(subject)) {}

}  // namespace mind
