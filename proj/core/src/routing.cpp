// SPDX-License-Identifier: Apache-2.0
#include "mind/routing.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "mind/assets.hpp"
#include "mind/clients.hpp"
#include "mind/error.hpp"

namespace mind {

std::string word_padded(std::string_view text) {
  std::string out = " ";
  for (const auto& tok : tokenize_words(text)) {
    out += tok;
    out += ' ';
  }
  return out;
}

std::string_view field_phrase(CueField field) noexcept {
  switch (field) {
    case CueField::complaint: return "main complaint";
    case CueField::symptom: return "symptoms";
    case CueField::duration: return "duration";
    case CueField::severity: return "severity";
    case CueField::sleep: return "sleep";
    case CueField::risk: return "self-harm risk";
    case CueField::psychosis_mania: return "psychosis or mania";
    case CueField::stressor: return "stressors";
    case CueField::substance: return "substance use";
  }
  return "symptoms";
}

FieldRouter FieldRouter::parse(std::string_view jsonl) {
  FieldRouter router;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, "routing table", e.what());
    }
    if (!header) {
      if (j.value("schema", "") != "routing-v1") throw Error(ErrorCode::SchemaVersionMismatch, j.dump());
      header = true;
      continue;
    }
    const auto name = j.at("field").get<std::string>();
    auto field = parse_field(name);
    if (!field) throw Error(ErrorCode::UnknownField, name, "routing table");
    auto& list = router.keywords_[static_cast<std::size_t>(*field)];
    for (const auto& kw : j.at("keywords")) {
      std::string padded = word_padded(kw.get<std::string>());
      if (padded.size() > 2) list.push_back(std::move(padded));
    }
  }
  if (!header) throw Error(ErrorCode::Parse, "routing table", "missing header");
  return router;
}

const FieldRouter& FieldRouter::builtin() {
  static const FieldRouter router = parse(assets::routing_table());
  return router;
}

bool FieldRouter::mentions(std::string_view text, CueField field) const {
  const std::string padded = word_padded(text);
  for (const auto& kw : keywords(field)) {
    if (padded.find(kw) != std::string::npos) return true;
  }
  return false;
}

std::vector<CueField> FieldRouter::route(std::string_view text) const {
  const std::string padded = word_padded(text);
  std::vector<CueField> out;
  for (auto field : kAllFields) {
    for (const auto& kw : keywords(field)) {
      if (padded.find(kw) != std::string::npos) {
        out.push_back(field);
        break;
      }
    }
  }
  return out;
}

}  // namespace mind
