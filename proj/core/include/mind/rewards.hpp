// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mind/judge.hpp"
#include "mind/types.hpp"

namespace mind {

enum class PenaltyKind { format, loop, budget };

std::string_view to_string(PenaltyKind kind) noexcept;
/// Error{UnknownEventKind}.
PenaltyKind parse_penalty_kind(std::string_view name);

struct RewardConfig {
  int s_max = kDefaultSMax;
  std::vector<std::string> dims = {"sym", "diff", "dec"};
  double lambda_retr = 0.01;
  double lambda_gain = 0.005;
  double lambda_proc = 0.01;
  std::map<std::string, double> penalty_weights = {{"format", 0.1}, {"loop", 0.1}, {"budget", 0.1}};
  double terminal_weight = 5.0;
  double turn_weight = 1.0;
  double alpha_sim = 0.5;
  double alpha_qual = 0.5;

  /// Error{Config | EmptyDims | UnknownEventKind}.
  void validate() const;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

void to_json(nlohmann::json& j, const RewardConfig& cfg);
/// Unknown keys are rejected with Error{Config}.
void from_json(const nlohmann::json& j, RewardConfig& cfg);

struct RewardBreakdown {
  double proc = 0.0;
  double retr = 0.0;
  double gain = 0.0;
  double pen = 0.0;
  double turn_total = 0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double process_reward(const RubricScores& scores, const RewardConfig& cfg);
double retrieval_reward(double rho, const RewardConfig& cfg);
double info_gain_reward(std::size_t newly_revealed, const RewardConfig& cfg);
double penalty(std::span<const PenaltyKind> events, const RewardConfig& cfg);
/// By name; Error{UnknownEventKind} for names outside the weight table.
double penalty(std::span<const std::string> events, const RewardConfig& cfg);
/// A missing prediction scores 0.
double terminal_reward(const std::optional<DiagnosisLabel>& predicted, DiagnosisLabel truth, const RewardConfig& cfg);

RewardBreakdown make_breakdown(double proc, double retr, double gain, double pen);

double aggregate(std::span<const RewardBreakdown> turns, double terminal, const RewardConfig& cfg);

/// (R - mean) / population std; all zeros when std < 1e-12.
std::vector<double> grpo_advantages(std::span<const double> returns);

}  // namespace mind
