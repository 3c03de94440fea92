// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mind {

enum class ErrorCode {
  // core
  DuplicateCueId,
  EmptyExplicitCues,
  UnknownField,
  UnknownCueId,
  UnknownLabel,
  // clients
  Transport,
  Timeout,
  BudgetExceeded,
  DimMismatch,
  ZeroVector,
  // prb
  EmptyState,
  EmptyIndex,
  EmptyHits,
  Io,
  SchemaVersionMismatch,
  BackendFingerprintMismatch,
  InvalidEntry,
  // rewards
  EmptyDims,
  UnknownEventKind,
  // patientsim
  MissingPrior,
  // runner
  Mismatch,
  NonFiniteLogits,
  // config / io
  Config,
  Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. `subject` names the offending item
/// (a cue id, a field, a path) when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject = {}, std::string detail = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace mind
