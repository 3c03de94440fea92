// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "mind/types.hpp"

namespace mind {

/// Keyword routing from free text to cue fields. Phrases match on word
/// boundaries after lowercasing and collapsing punctuation to spaces.
class FieldRouter {
 public:
  /// The shipped routing-v1 table.
  static const FieldRouter& builtin();
  /// Parses a routing-v1 line-delimited table. Error{Parse | UnknownField}.
  static FieldRouter parse(std::string_view jsonl);

  /// Fields the text touches, in enum order, without duplicates.
  std::vector<CueField> route(std::string_view text) const;
  bool mentions(std::string_view text, CueField field) const;

  const std::vector<std::string>& keywords(CueField field) const {
    return keywords_[static_cast<std::size_t>(field)];
  }

 private:
  std::array<std::vector<std::string>, kAllFields.size()> keywords_;
};

/// " tok1 tok2 ... " over lowercased alphanumeric tokens.
std::string word_padded(std::string_view text);

/// Readable phrase for a field ("psychosis_mania" -> "psychosis or mania").
std::string_view field_phrase(CueField field) noexcept;

}  // namespace mind
