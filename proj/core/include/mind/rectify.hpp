// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mind/clients.hpp"
#include "mind/prb.hpp"
#include "mind/protocol.hpp"
#include "mind/rewards.hpp"
#include "mind/routing.hpp"
#include "mind/types.hpp"

namespace mind {

enum class UtilityKind { DuplicateInquiry, FormatFailure, ZeroGainStreak, OffTopicDrift, BudgetNear };

std::string_view to_string(UtilityKind kind) noexcept;
std::optional<UtilityKind> parse_utility_kind(std::string_view name) noexcept;

struct UtilityEvent {
  UtilityKind kind = UtilityKind::FormatFailure;
  std::string detail;
  friend bool operator==(const UtilityEvent&, const UtilityEvent&) = default;
};

/// FormatFailure -> format; DuplicateInquiry, ZeroGainStreak, OffTopicDrift -> loop; BudgetNear -> budget.
PenaltyKind penalty_for(UtilityKind kind) noexcept;

struct RectifyConfig {
  int max_retries = 1;
  int fallback_cap = 2;
  double duplicate_threshold = 0.95;
  int streak = 2;

  /// Error{Config}.
  void validate() const;
  friend bool operator==(const RectifyConfig&, const RectifyConfig&) = default;
};

void to_json(nlohmann::json& j, const RectifyConfig& cfg);
void from_json(const nlohmann::json& j, RectifyConfig& cfg);

struct Accept {
  friend bool operator==(const Accept&, const Accept&) = default;
};
struct Retry {
  std::string constraint_note;
  int attempt = 1;
  friend bool operator==(const Retry&, const Retry&) = default;
};
struct Fallback {
  std::string entry_id;
  std::string ref_inquiry;
  friend bool operator==(const Fallback&, const Fallback&) = default;
};
using RectifyDecision = std::variant<Accept, Retry, Fallback>;

std::string describe(const RectifyDecision& decision);

struct DetectContext {
  const Embedder& embed;
  const FieldRouter& router;
  RectifyConfig cfg;
  std::size_t max_turns = 10;
};

/// Rule checks on one stage-2 output. `recent_gains` holds the reveal counts
/// of the completed turns, oldest first.
std::vector<UtilityEvent> detect(const protocol::ParseResult<protocol::Stage2Output>& output, const DialogueHistory& history,
                                 std::span<const std::size_t> recent_gains, const DetectContext& ctx);

/// Exact string match or cosine >= threshold between embedded inquiries.
bool is_duplicate(std::string_view a, std::string_view b, const Embedder& embed, double threshold);

struct EpisodeRectifyState {
  int retries_this_turn = 0;
  int fallbacks_used = 0;
};

/// Escalation ladder: Accept when clean, then Retry up to max_retries, then
/// Fallback to the nearest eligible entry while under the cap, then Accept.
/// BudgetNear alone never falls back (a reference inquiry cannot end the episode).
RectifyDecision decide(std::span<const UtilityEvent> events, const EpisodeRectifyState& state,
                       const prb::PrbIndex* index, const std::optional<EmbeddingVector>& q_t,
                       const RectifyConfig& cfg);

std::string constraint_note(std::span<const UtilityEvent> events);

/// Per-episode wrapper that keeps the counters.
class Rectifier {
 public:
  explicit Rectifier(RectifyConfig cfg) : cfg_(cfg) {}

  void begin_turn() { state_.retries_this_turn = 0; }
  RectifyDecision step(std::span<const UtilityEvent> events, const prb::PrbIndex* index,
                       const std::optional<EmbeddingVector>& q_t);

  const EpisodeRectifyState& state() const noexcept { return state_; }
  const RectifyConfig& config() const noexcept { return cfg_; }

 private:
  RectifyConfig cfg_;
  EpisodeRectifyState state_;
};

}  // namespace mind
