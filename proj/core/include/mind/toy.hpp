// SPDX-License-Identifier: Apache-2.0
//
// Tabular softmax interviewer and a group-relative policy-gradient trainer
// over the scripted simulator, mock judge and reward engine.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mind/patientsim.hpp"
#include "mind/rewards.hpp"
#include "mind/types.hpp"

namespace mind {

struct TrainerConfig {
  int iters = 300;
  int group_size = 8;
  double lr = 0.05;
  double kl_coeff = 0.02;
  double clip_range = 0.15;
  double entropy_coeff = 1e-4;
  int update_epochs = 2;
  int n_cases = 20;
  std::uint64_t seed = 1;
  double accuracy_threshold = 0.9;
  int smoothing_window = 10;

  /// Error{Config}; group_size must be at least 2.
  void validate() const;
  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainerConfig& cfg);
void from_json(const nlohmann::json& j, TrainerConfig& cfg);

/// Askable fields of the toy menu, in action order.
inline constexpr std::array<CueField, 6> kToyFields = {CueField::symptom, CueField::stressor, CueField::duration,
                                                       CueField::severity, CueField::sleep, CueField::substance};
inline constexpr std::size_t kToyActions = kToyFields.size() + kAllLabels.size();

/// Balanced toy cases. The label is carried by the mood and worry cues, both
/// in the symptom field; the other fields are distractors.
std::vector<CaseProfile> toy_cases(std::size_t n);

/// Coarse state: per askable field 0 = not asked, else 1 + the base-3 code of
/// the statuses it returned; plus a turn bucket.
using ToyState = std::uint64_t;
ToyState toy_state(const std::array<int, kToyFields.size()>& fields, std::size_t turn);

class ToyPolicy {
 public:
  using Logits = std::array<double, kToyActions>;

  /// Initial logits are zero (uniform); the reference policy stays uniform.
  const Logits& logits(ToyState s);
  std::array<double, kToyActions> probs(ToyState s);
  std::size_t sample(ToyState s, Rng& rng);
  std::size_t greedy(ToyState s);
  void add(ToyState s, const Logits& delta);

  std::size_t size() const noexcept { return table_.size(); }
  const std::unordered_map<ToyState, Logits>& table() const noexcept { return table_; }

 private:
  std::unordered_map<ToyState, Logits> table_;
};

struct ToyStep {
  ToyState state = 0;
  std::size_t action = 0;
  double old_prob = 0.0;
};

struct ToyEpisode {
  std::vector<ToyStep> steps;
  std::vector<RewardBreakdown> turns;
  std::optional<DiagnosisLabel> diagnosis;
  double terminal = 0.0;
  double ret = 0.0;
};

enum class ToyMode { Sample, Greedy };

ToyEpisode run_toy_episode(ToyPolicy& policy, const CaseProfile& profile, const RewardConfig& reward,
                           std::size_t max_turns, ToyMode mode, Rng& rng);

struct CurvePoint {
  int iteration = 0;
  double mean_return = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double smoothed_accuracy = 0.0;  // trailing-window mean at the last iteration
  double greedy_accuracy = 0.0;
  bool threshold_met = false;
};

/// Error{NonFiniteLogits} if an update produces a non-finite logit.
TrainResult train_toy_grpo(const std::vector<CaseProfile>& cases, ToyPolicy& policy, const TrainerConfig& cfg,
                           const RewardConfig& reward, std::size_t max_turns = 10);

std::string curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace mind
