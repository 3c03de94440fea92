// SPDX-License-Identifier: Apache-2.0
#include "mind/types.hpp"

#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/hash.hpp"

namespace mind {

std::string to_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string_view to_string(DiagnosisLabel label) noexcept {
  switch (label) {
    case DiagnosisLabel::Depression: return "Depression";
    case DiagnosisLabel::Anxiety: return "Anxiety";
    case DiagnosisLabel::Mix: return "Mix";
    case DiagnosisLabel::Other: return "Other";
  }
  return "Other";
}

std::optional<DiagnosisLabel> parse_label(std::string_view name) noexcept {
  for (auto label : kAllLabels) {
    if (to_string(label) == name) return label;
  }
  return std::nullopt;
}

std::string_view to_string(CueField field) noexcept {
  switch (field) {
    case CueField::complaint: return "complaint";
    case CueField::symptom: return "symptom";
    case CueField::duration: return "duration";
    case CueField::severity: return "severity";
    case CueField::sleep: return "sleep";
    case CueField::risk: return "risk";
    case CueField::psychosis_mania: return "psychosis_mania";
    case CueField::stressor: return "stressor";
    case CueField::substance: return "substance";
  }
  return "complaint";
}

std::optional<CueField> parse_field(std::string_view name) noexcept {
  for (auto field : kAllFields) {
    if (to_string(field) == name) return field;
  }
  return std::nullopt;
}

std::string_view to_string(CueStatus status) noexcept {
  switch (status) {
    case CueStatus::present: return "present";
    case CueStatus::absent: return "absent";
    case CueStatus::unknown: return "unknown";
  }
  return "unknown";
}

std::optional<CueStatus> parse_status(std::string_view name) noexcept {
  if (name == "present") return CueStatus::present;
  if (name == "absent") return CueStatus::absent;
  if (name == "unknown") return CueStatus::unknown;
  return std::nullopt;
}

const CueItem* CaseProfile::find_cue(std::string_view id) const noexcept {
  for (const auto* list : {&explicit_cues, &implicit_cues}) {
    for (const auto& cue : *list) {
      if (cue.id == id) return &cue;
    }
  }
  return nullptr;
}

std::set<std::string> CaseProfile::cue_ids() const {
  std::set<std::string> ids;
  for (const auto& c : explicit_cues) ids.insert(c.id);
  for (const auto& c : implicit_cues) ids.insert(c.id);
  return ids;
}

const CaseProfile& validate_profile(const CaseProfile& profile) {
  if (profile.explicit_cues.empty()) {
    throw Error(ErrorCode::EmptyExplicitCues, profile.case_id);
  }
  std::unordered_set<std::string> seen;
  for (const auto* list : {&profile.explicit_cues, &profile.implicit_cues}) {
    for (const auto& cue : *list) {
      if (!seen.insert(cue.id).second) throw Error(ErrorCode::DuplicateCueId, cue.id);
    }
  }
  return profile;
}

DialogueHistory DialogueHistory::with_agent(std::string text) const {
  DialogueHistory next = *this;
  next.turns_.push_back({Speaker::agent, std::move(text)});
  ++next.turn_index_;
  return next;
}

DialogueHistory DialogueHistory::with_patient(std::string text) const {
  DialogueHistory next = *this;
  next.turns_.push_back({Speaker::patient, std::move(text)});
  return next;
}

std::vector<std::string> DialogueHistory::agent_utterances() const {
  std::vector<std::string> out;
  for (const auto& u : turns_) {
    if (u.speaker == Speaker::agent) out.push_back(u.text);
  }
  return out;
}

RevealResult reveal(const DialogueHistory& history, const std::set<std::string>& cue_ids,
                    const std::set<std::string>& universe) {
  for (const auto& id : cue_ids) {
    if (!universe.contains(id)) throw Error(ErrorCode::UnknownCueId, id);
  }
  RevealResult result{history, 0};
  for (const auto& id : cue_ids) {
    if (result.history.revealed_.insert(id).second) ++result.newly_revealed;
  }
  return result;
}

void to_json(nlohmann::json& j, const CueItem& cue) {
  j = nlohmann::json{{"id", cue.id},
                     {"field", to_string(cue.field)},
                     {"value", cue.value},
                     {"status", to_string(cue.status)}};
}

void from_json(const nlohmann::json& j, CueItem& cue) {
  cue.id = j.at("id").get<std::string>();
  const auto field = j.at("field").get<std::string>();
  auto parsed = parse_field(field);
  if (!parsed) throw Error(ErrorCode::UnknownField, field, "cue " + cue.id);
  cue.field = *parsed;
  cue.value = j.at("value").get<std::string>();
  const auto status = j.value("status", std::string("present"));
  auto st = parse_status(status);
  if (!st) throw Error(ErrorCode::Parse, status, "unknown cue status on " + cue.id);
  cue.status = *st;
}

void to_json(nlohmann::json& j, const CaseProfile& profile) {
  j = nlohmann::json{{"case_id", profile.case_id},
                     {"explicit_cues", profile.explicit_cues},
                     {"implicit_cues", profile.implicit_cues},
                     {"label", to_string(profile.label)}};
}

void from_json(const nlohmann::json& j, CaseProfile& profile) {
  profile.case_id = j.at("case_id").get<std::string>();
  profile.explicit_cues = j.at("explicit_cues").get<std::vector<CueItem>>();
  profile.implicit_cues = j.value("implicit_cues", std::vector<CueItem>{});
  const auto label = j.at("label").get<std::string>();
  auto parsed = parse_label(label);
  if (!parsed) throw Error(ErrorCode::UnknownLabel, label, "case " + profile.case_id);
  profile.label = *parsed;
}

std::vector<CaseProfile> load_cases(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open case file");
  std::vector<CaseProfile> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CaseProfile profile;
    try {
      profile = nlohmann::json::parse(line).get<CaseProfile>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no), e.what());
    }
    cases.push_back(validate_profile(profile));
  }
  return cases;
}

void save_cases(const std::string& path, const std::vector<CaseProfile>& cases) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, path, "cannot write case file");
  for (const auto& c : cases) out << nlohmann::json(c).dump() << '\n';
}

}  // namespace mind
