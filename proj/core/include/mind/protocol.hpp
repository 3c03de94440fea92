// SPDX-License-Identifier: Apache-2.0
//
// The two-stage tagged turn format.
//
//   stage 1:  [<think> z </think>] <rag_query> q </rag_query>
//   stage 2:  <think> z </think> <answer> a </answer>
//
// Tags are flat: a second opening tag before the pending one closes marks the
// pending one as unclosed. Whitespace between blocks is ignored; anything else
// outside a block is reported as TrailingGarbage. When several well-formed
// blocks of the same tag exist, the first one is used and DuplicateTag is
// reported (lenient recovery).
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mind/types.hpp"

namespace mind::protocol {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kQueryOpen = "<rag_query>";
inline constexpr std::string_view kQueryClose = "</rag_query>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kDiagnosisMarker = "<Diagnosis>:";
inline constexpr std::string_view kRecommendationMarker = "<Recommendation>:";

enum class Tag { think, rag_query, answer };

std::string_view to_string(Tag tag) noexcept;

enum class ViolationKind {
  MissingTag,
  UnclosedTag,
  DuplicateTag,
  EmptySegment,
  TrailingGarbage,
  // Diagnosis marker present but the label is not one of the four.
  UnknownLabel,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct FormatViolation {
  ViolationKind kind = ViolationKind::MissingTag;
  std::size_t location = 0;  // byte offset into the raw text
  std::string detail;        // tag name or offending label

  friend bool operator==(const FormatViolation&, const FormatViolation&) = default;
};

struct Stage1Output {
  std::optional<std::string> think;
  std::string rag_query;
  friend bool operator==(const Stage1Output&, const Stage1Output&) = default;
};

struct Stage2Output {
  std::string think;
  Action action;
  friend bool operator==(const Stage2Output&, const Stage2Output&) = default;
};

template <typename T>
struct ParseResult {
  std::optional<T> value;
  std::vector<FormatViolation> violations;

  /// Parsed without any lenient recovery.
  bool clean() const noexcept { return value.has_value() && violations.empty(); }
};

ParseResult<Stage1Output> parse_stage1(std::string_view raw);
ParseResult<Stage2Output> parse_stage2(std::string_view raw);

/// Parses an answer body: `<Diagnosis>: Label [<Recommendation>:] rest` is a
/// diagnosis, anything else an inquiry. Returns nullopt for an unknown label.
std::optional<Action> classify_answer(std::string_view body);

/// Violations in document order; empty iff the text parses cleanly.
std::vector<FormatViolation> check_compliance(std::string_view raw, int stage);

std::string render(const Stage1Output& out);
std::string render(const Stage2Output& out);
std::string render_answer(const Action& action);

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text) noexcept;

}  // namespace mind::protocol
