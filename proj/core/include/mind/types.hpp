// SPDX-License-Identifier: Apache-2.0
//
// Domain values shared by every module: diagnosis labels, profile cues,
// agent actions and the dialogue history. All of them are plain values;
// "updates" return new values.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mind {

enum class DiagnosisLabel { Depression, Anxiety, Mix, Other };

inline constexpr std::array<DiagnosisLabel, 4> kAllLabels = {
    DiagnosisLabel::Depression, DiagnosisLabel::Anxiety, DiagnosisLabel::Mix, DiagnosisLabel::Other};

std::string_view to_string(DiagnosisLabel label) noexcept;
/// Exact, case-sensitive match on the four label names.
std::optional<DiagnosisLabel> parse_label(std::string_view name) noexcept;

enum class CueField {
  complaint,
  symptom,
  duration,
  severity,
  sleep,
  risk,
  psychosis_mania,
  stressor,
  substance,
};

inline constexpr std::array<CueField, 9> kAllFields = {
    CueField::complaint, CueField::symptom,         CueField::duration,
    CueField::severity,  CueField::sleep,           CueField::risk,
    CueField::psychosis_mania, CueField::stressor,  CueField::substance};

std::string_view to_string(CueField field) noexcept;
std::optional<CueField> parse_field(std::string_view name) noexcept;

enum class CueStatus { present, absent, unknown };

std::string_view to_string(CueStatus status) noexcept;
std::optional<CueStatus> parse_status(std::string_view name) noexcept;

struct CueItem {
  std::string id;
  CueField field = CueField::complaint;
  std::string value;
  CueStatus status = CueStatus::present;

  friend bool operator==(const CueItem&, const CueItem&) = default;
};

struct CaseProfile {
  std::string case_id;
  std::vector<CueItem> explicit_cues;
  std::vector<CueItem> implicit_cues;
  DiagnosisLabel label = DiagnosisLabel::Other;

  /// Looks a cue up in either list.
  const CueItem* find_cue(std::string_view id) const noexcept;
  std::set<std::string> cue_ids() const;

  friend bool operator==(const CaseProfile&, const CaseProfile&) = default;
};

/// Throws Error{DuplicateCueId | EmptyExplicitCues}; returns the profile unchanged otherwise.
const CaseProfile& validate_profile(const CaseProfile& profile);

struct Inquiry {
  std::string question;
  friend bool operator==(const Inquiry&, const Inquiry&) = default;
};

struct Diagnose {
  DiagnosisLabel label = DiagnosisLabel::Other;
  std::string recommendation;
  friend bool operator==(const Diagnose&, const Diagnose&) = default;
};

using Action = std::variant<Inquiry, Diagnose>;

inline bool is_diagnose(const Action& action) noexcept {
  return std::holds_alternative<Diagnose>(action);
}

enum class Speaker { agent, patient };

struct RevealResult;
class DialogueHistory;
RevealResult reveal(const DialogueHistory& history, const std::set<std::string>& cue_ids,
                    const std::set<std::string>& universe);

struct Utterance {
  Speaker speaker = Speaker::agent;
  std::string text;
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

class DialogueHistory {
 public:
  DialogueHistory() = default;

  const std::vector<Utterance>& turns() const noexcept { return turns_; }
  const std::set<std::string>& revealed_cue_ids() const noexcept { return revealed_; }
  std::size_t turn_index() const noexcept { return turn_index_; }

  /// Appends an agent utterance and completes one agent turn.
  DialogueHistory with_agent(std::string text) const;
  /// Appends a patient utterance; the turn index is unchanged.
  DialogueHistory with_patient(std::string text) const;

  /// Agent inquiries asked so far, in order.
  std::vector<std::string> agent_utterances() const;

  friend bool operator==(const DialogueHistory&, const DialogueHistory&) = default;

 private:
  friend RevealResult reveal(const DialogueHistory&, const std::set<std::string>&,
                             const std::set<std::string>&);
  std::vector<Utterance> turns_;
  std::set<std::string> revealed_;
  std::size_t turn_index_ = 0;
};

struct RevealResult {
  DialogueHistory history;
  std::size_t newly_revealed = 0;
};

/// Unions `cue_ids` into the revealed set. Every id must be in `universe`
/// (Error{UnknownCueId} otherwise).
RevealResult reveal(const DialogueHistory& history, const std::set<std::string>& cue_ids,
                    const std::set<std::string>& universe);

// JSON (line-delimited case files).
void to_json(nlohmann::json& j, const CueItem& cue);
void from_json(const nlohmann::json& j, CueItem& cue);
void to_json(nlohmann::json& j, const CaseProfile& profile);
void from_json(const nlohmann::json& j, CaseProfile& profile);

/// Reads one case per line; blank lines are skipped. Each profile is validated.
std::vector<CaseProfile> load_cases(const std::string& path);
void save_cases(const std::string& path, const std::vector<CaseProfile>& cases);

}  // namespace mind
