// SPDX-License-Identifier: Apache-2.0
#include "mind/rectify.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"

namespace mind {

std::string_view to_string(UtilityKind kind) noexcept {
  switch (kind) {
    case UtilityKind::DuplicateInquiry: return "DuplicateInquiry";
    case UtilityKind::FormatFailure: return "FormatFailure";
    case UtilityKind::ZeroGainStreak: return "ZeroGainStreak";
    case UtilityKind::OffTopicDrift: return "OffTopicDrift";
    case UtilityKind::BudgetNear: return "BudgetNear";
  }
  return "FormatFailure";
}

std::optional<UtilityKind> parse_utility_kind(std::string_view name) noexcept {
  for (auto k : {UtilityKind::DuplicateInquiry, UtilityKind::FormatFailure, UtilityKind::ZeroGainStreak,
                 UtilityKind::OffTopicDrift, UtilityKind::BudgetNear}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

PenaltyKind penalty_for(UtilityKind kind) noexcept {
  switch (kind) {
    case UtilityKind::FormatFailure: return PenaltyKind::format;
    case UtilityKind::BudgetNear: return PenaltyKind::budget;
    default: return PenaltyKind::loop;
  }
}

void RectifyConfig::validate() const {
  if (max_retries < 0) throw Error(ErrorCode::Config, "rectify.max_retries", "must be >= 0");
  if (fallback_cap < 0) throw Error(ErrorCode::Config, "rectify.fallback_cap", "must be >= 0");
  if (!(duplicate_threshold > 0.0 && duplicate_threshold <= 1.0)) {
    throw Error(ErrorCode::Config, "rectify.duplicate_threshold", "must be in (0, 1]");
  }
  if (streak < 1) throw Error(ErrorCode::Config, "rectify.streak", "must be >= 1");
}

void to_json(nlohmann::json& j, const RectifyConfig& cfg) {
  j = nlohmann::json{{"max_retries", cfg.max_retries},
                     {"fallback_cap", cfg.fallback_cap},
                     {"duplicate_threshold", cfg.duplicate_threshold},
                     {"streak", cfg.streak}};
}

void from_json(const nlohmann::json& j, RectifyConfig& cfg) {
  static const std::set<std::string> keys = {"max_retries", "fallback_cap", "duplicate_threshold", "streak"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "rectify", "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) throw Error(ErrorCode::Config, "rectify." + key, "unknown key");
  }
  RectifyConfig out;
  out.max_retries = j.value("max_retries", out.max_retries);
  out.fallback_cap = j.value("fallback_cap", out.fallback_cap);
  out.duplicate_threshold = j.value("duplicate_threshold", out.duplicate_threshold);
  out.streak = j.value("streak", out.streak);
  out.validate();
  cfg = out;
}

std::string describe(const RectifyDecision& decision) {
  if (std::holds_alternative<Accept>(decision)) return "Accept";
  if (const auto* r = std::get_if<Retry>(&decision)) return "Retry(" + std::to_string(r->attempt) + ")";
  return "Fallback(" + std::get<Fallback>(decision).entry_id + ")";
}

bool is_duplicate(std::string_view a, std::string_view b, const Embedder& embed, double threshold) {
  const auto ta = protocol::trim(a);
  const auto tb = protocol::trim(b);
  if (ta == tb) return true;
  const auto va = embed.embed(ta);
  const auto vb = embed.embed(tb);
  if (va.zero || vb.zero) return false;
  return cosine(va, vb) >= threshold;
}

std::vector<UtilityEvent> detect(const protocol::ParseResult<protocol::Stage2Output>& output, const DialogueHistory& history,
                                 std::span<const std::size_t> recent_gains, const DetectContext& ctx) {
  std::vector<UtilityEvent> events;
  if (!output.clean()) {
    std::string detail;
    for (const auto& v : output.violations) {
      if (!detail.empty()) detail += ",";
      detail += std::string(protocol::to_string(v.kind)) + "@" + std::to_string(v.location);
    }
    if (detail.empty()) detail = "unparseable";
    events.push_back({UtilityKind::FormatFailure, detail});
  }

  const bool diagnosed = output.value && is_diagnose(output.value->action);
  if (output.value && !diagnosed) {
    const auto& question = std::get<Inquiry>(output.value->action).question;
    const auto prior = history.agent_utterances();
    for (std::size_t i = 0; i < prior.size(); ++i) {
      if (is_duplicate(question, prior[i], ctx.embed, ctx.cfg.duplicate_threshold)) {
        events.push_back({UtilityKind::DuplicateInquiry, "repeats turn " + std::to_string(i)});
        break;
      }
    }
    if (ctx.router.route(question).empty()) {
      events.push_back({UtilityKind::OffTopicDrift, "proxy: inquiry routes to no cue field"});
    }
    const auto s = static_cast<std::size_t>(ctx.cfg.streak);
    if (recent_gains.size() >= s &&
        std::all_of(recent_gains.end() - static_cast<std::ptrdiff_t>(s), recent_gains.end(),
                    [](std::size_t g) { return g == 0; })) {
      events.push_back({UtilityKind::ZeroGainStreak, "no new cues in the last " + std::to_string(s) + " turns"});
    }
  }

  if (!diagnosed && ctx.max_turns >= 1 && history.turn_index() + 1 == ctx.max_turns) {
    events.push_back({UtilityKind::BudgetNear, "last turn without a diagnosis"});
  }
  return events;
}

std::string constraint_note(std::span<const UtilityEvent> events) {
  std::string note;
  auto add = [&](std::string_view text) {
    if (note.find(text) != std::string::npos) return;
    if (!note.empty()) note += " ";
    note += text;
  };
  for (const auto& e : events) {
    switch (e.kind) {
      case UtilityKind::DuplicateInquiry:
        add("Do not repeat prior questions; target an unrevealed field.");
        break;
      case UtilityKind::FormatFailure:
        add("Follow the output format exactly: <think>...</think><answer>...</answer>.");
        break;
      case UtilityKind::ZeroGainStreak:
        add("Recent questions revealed nothing new; ask about a field not covered yet.");
        break;
      case UtilityKind::OffTopicDrift:
        add("Ask about a clinical field such as symptoms, duration, severity, sleep or risk.");
        break;
      case UtilityKind::BudgetNear:
        add("This is the last turn; give the diagnosis now.");
        break;
    }
  }
  return note;
}

RectifyDecision decide(std::span<const UtilityEvent> events, const EpisodeRectifyState& state,
                       const prb::PrbIndex* index, const std::optional<EmbeddingVector>& q_t,
                       const RectifyConfig& cfg) {
  if (events.empty()) return Accept{};
  if (state.retries_this_turn < cfg.max_retries) {
    return Retry{constraint_note(events), state.retries_this_turn + 1};
  }
  const bool only_budget =
      std::all_of(events.begin(), events.end(), [](const UtilityEvent& e) { return e.kind == UtilityKind::BudgetNear; });
  if (only_budget || state.fallbacks_used >= cfg.fallback_cap || !index || !q_t) return Accept{};
  const prb::PRBEntry* nearest = prb::nearest_entry(*index, *q_t);
  if (!nearest) return Accept{};
  return Fallback{nearest->entry_id, nearest->ref_inquiry};
}

RectifyDecision Rectifier::step(std::span<const UtilityEvent> events, const prb::PrbIndex* index,
                                const std::optional<EmbeddingVector>& q_t) {
  auto d = decide(events, state_, index, q_t, cfg_);
  if (std::holds_alternative<Retry>(d)) ++state_.retries_this_turn;
  if (std::holds_alternative<Fallback>(d)) ++state_.fallbacks_used;
  return d;
}

}  // namespace mind
