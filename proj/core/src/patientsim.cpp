// SPDX-License-Identifier: Apache-2.0
#include "mind/patientsim.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mind/assets.hpp"
#include "mind/error.hpp"
#include "mind/protocol.hpp"

namespace mind {

namespace {

std::string sentence(std::string_view text) {
  std::string out(protocol::trim(text));
  if (out.empty()) return out;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  const char last = out.back();
  if (last != '.' && last != '?' && last != '!') out += '.';
  return out;
}

constexpr std::string_view kAdaptFrames[] = {"{}", "Hmm. {}", "Well... {}", "Let me think. {}",
                                             "{} That is how it has been."};
constexpr std::string_view kUnroutable[] = {"I'm not sure what you mean.", "Sorry, I'm not sure what you are asking.",
                                            "I don't really know how to answer that."};

std::string frame(std::string_view tmpl, const std::string& body) {
  std::string out(tmpl);
  out.replace(out.find("{}"), 2, body);
  return out;
}

}  // namespace

// ---- priors ---------------------------------------------------------------------

PriorTable PriorTable::parse(std::string_view jsonl) {
  PriorTable table;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, "prior table", e.what());
    }
    if (!header) {
      if (j.value("schema", "") != "priors-v1") throw Error(ErrorCode::SchemaVersionMismatch, j.dump());
      header = true;
      continue;
    }
    const auto label_name = j.at("label").get<std::string>();
    const auto field_name = j.at("field").get<std::string>();
    const auto status_name = j.at("status").get<std::string>();
    auto label = parse_label(label_name);
    if (!label) throw Error(ErrorCode::UnknownLabel, label_name, "prior table");
    auto field = parse_field(field_name);
    if (!field) throw Error(ErrorCode::UnknownField, field_name, "prior table");
    auto status = parse_status(status_name);
    if (!status) throw Error(ErrorCode::Parse, status_name, "prior table status");
    table.set(*label, *field, *status);
  }
  if (!header) throw Error(ErrorCode::Parse, "prior table", "missing header");
  if (!table.total()) throw Error(ErrorCode::MissingPrior, "prior table", "table is not total");
  return table;
}

const PriorTable& PriorTable::builtin() {
  static const PriorTable table = parse(assets::prior_table());
  return table;
}

CueStatus PriorTable::lookup(DiagnosisLabel label, CueField field) const {
  const auto& v = table_[static_cast<std::size_t>(label)][static_cast<std::size_t>(field)];
  if (!v) throw Error(ErrorCode::MissingPrior, std::string(to_string(label)) + "/" + std::string(to_string(field)));
  return *v;
}

void PriorTable::set(DiagnosisLabel label, CueField field, CueStatus status) {
  table_[static_cast<std::size_t>(label)][static_cast<std::size_t>(field)] = status;
}

bool PriorTable::total() const noexcept {
  for (const auto& row : table_) {
    for (const auto& v : row) {
      if (!v) return false;
    }
  }
  return true;
}

std::string memory_key(CueField field) { return "field:" + std::string(to_string(field)); }

CueStatus weak_infer(CueField field, DiagnosisLabel label, const PriorTable& priors, SimMemory& memory,
                     const std::string& key) {
  if (auto it = memory.asserted.find(key); it != memory.asserted.end()) return it->second.status;
  const CueStatus status = priors.lookup(label, field);
  memory.asserted[key] = {status, {}};
  memory.inferred.insert(key);
  return status;
}

// ---- simulator ------------------------------------------------------------------

PatientSimulator::PatientSimulator(CaseProfile profile, SimMode mode, const PriorTable& priors,
                                   const FieldRouter& router)
    : profile_(std::move(profile)),
      mode_(mode),
      priors_(priors),
      router_(router),
      rng_(derive_seed(mode.seed, profile_.case_id)) {
  validate_profile(profile_);
}

std::string PatientSimulator::phrase(const SimFact& fact, const CueItem* cue, bool inferred) {
  const std::string topic(field_phrase(fact.field));
  if (cue && !inferred && !protocol::trim(cue->value).empty()) return sentence(cue->value);
  switch (fact.status) {
    case CueStatus::present:
      return inferred ? "Now that you ask, my " + topic + " has not been right either."
                      : "Yes, I have had problems with my " + topic + ".";
    case CueStatus::absent:
      return inferred ? "No, nothing unusual with my " + topic + "." : "No, no problems with my " + topic + ".";
    case CueStatus::unknown:
      break;
  }
  return "I'm not sure about my " + topic + ".";
}

SimReply PatientSimulator::opening() {
  SimReply reply;
  std::vector<std::string> parts;
  for (const auto& cue : profile_.explicit_cues) {
    bool inferred = false;
    CueStatus status = cue.status;
    if (auto it = memory_.asserted.find(cue.id); it != memory_.asserted.end()) {
      status = it->second.status;
      inferred = memory_.inferred.count(cue.id) > 0;
    } else if (status == CueStatus::unknown) {
      status = weak_infer(cue.field, profile_.label, priors_, memory_, cue.id);
      inferred = true;
    } else {
      memory_.asserted[cue.id] = {status, {}};
    }
    SimFact fact{cue.id, cue.field, status};
    auto& entry = memory_.asserted[cue.id];
    if (entry.phrasing.empty()) entry.phrasing = phrase(fact, &cue, inferred);
    parts.push_back(entry.phrasing);
    if (status != CueStatus::unknown) reply.revealed.insert(cue.id);
    reply.facts.push_back(fact);
  }
  std::string body;
  for (const auto& p : parts) body += (body.empty() ? "" : " ") + p;
  reply.utterance = "Hello doctor. " + body;
  return reply;
}

SimReply PatientSimulator::respond(std::string_view question) {
  if (protocol::trim(question).empty()) throw Error(ErrorCode::Config, "question", "empty question");
  SimReply reply;
  reply.routed = router_.route(question);
  const bool adapt = mode_.kind == SimMode::Kind::Adapt;

  if (reply.routed.empty()) {
    reply.utterance = adapt ? std::string(kUnroutable[rng_.below(std::size(kUnroutable))]) : std::string(kUnroutable[0]);
    return reply;
  }

  std::vector<std::string> parts;
  auto answer = [&](const std::string& key, CueField field, const CueItem* cue) {
    const bool known = memory_.asserted.count(key) > 0;
    CueStatus status;
    if (known) {
      status = memory_.asserted.at(key).status;
    } else if (cue && cue->status != CueStatus::unknown) {
      status = cue->status;
      memory_.asserted[key] = {status, {}};
    } else {
      status = weak_infer(field, profile_.label, priors_, memory_, key);
    }
    SimFact fact{key, field, status};
    auto& entry = memory_.asserted[key];
    if (entry.phrasing.empty()) entry.phrasing = phrase(fact, cue, memory_.inferred.count(key) > 0);
    parts.push_back(entry.phrasing);
    if (!known && cue && status != CueStatus::unknown) reply.revealed.insert(key);
    reply.facts.push_back(std::move(fact));
  };

  for (auto field : reply.routed) {
    bool any = false;
    for (const auto* list : {&profile_.explicit_cues, &profile_.implicit_cues}) {
      for (const auto& cue : *list) {
        if (cue.field != field) continue;
        any = true;
        answer(cue.id, field, &cue);
      }
    }
    if (!any) answer(memory_key(field), field, nullptr);
  }

  std::string body;
  for (const auto& p : parts) {
    const std::string piece = adapt ? frame(kAdaptFrames[rng_.below(std::size(kAdaptFrames))], p) : p;
    body += (body.empty() ? "" : " ") + piece;
  }
  reply.utterance = std::move(body);
  return reply;
}

// ---- audit ------------------------------------------------------------------------

ConsistencyReport audit_consistency(const std::vector<TranscriptTurn>& transcript, const CaseProfile& profile,
                                    const FieldRouter& router) {
  ConsistencyReport report;
  std::map<std::string, CueStatus> last;
  std::size_t routable = 0;
  std::size_t answered = 0;
  for (const auto& turn : transcript) {
    for (const auto& fact : turn.facts) {
      auto [it, inserted] = last.try_emplace(fact.key, fact.status);
      if (!inserted && it->second != fact.status) {
        ++report.fc_violations;
        it->second = fact.status;
      }
    }
    const auto routed = router.route(turn.question);
    if (!routed.empty()) {
      ++routable;
      const bool all = std::all_of(routed.begin(), routed.end(), [&](CueField f) {
        return std::any_of(turn.facts.begin(), turn.facts.end(), [&](const SimFact& x) { return x.field == f; });
      });
      if (all) ++answered;
    }
    for (const auto& id : turn.revealed) {
      const CueItem* cue = profile.find_cue(id);
      if (!cue || std::find(routed.begin(), routed.end(), cue->field) == routed.end()) ++report.overshare;
    }
  }
  if (routable > 0) report.completeness = static_cast<double>(answered) / static_cast<double>(routable);
  return report;
}

}  // namespace mind
