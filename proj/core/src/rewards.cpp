// SPDX-License-Identifier: Apache-2.0
#include "mind/rewards.hpp"

#include <cmath>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"

namespace mind {

std::string_view to_string(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::format: return "format";
    case PenaltyKind::loop: return "loop";
    case PenaltyKind::budget: return "budget";
  }
  return "format";
}

PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "format") return PenaltyKind::format;
  if (name == "loop") return PenaltyKind::loop;
  if (name == "budget") return PenaltyKind::budget;
  throw Error(ErrorCode::UnknownEventKind, std::string(name));
}

void RewardConfig::validate() const {
  if (dims.empty()) throw Error(ErrorCode::EmptyDims);
  std::set<std::string_view> seen;
  for (const auto& d : dims) {
    bool known = false;
    for (auto k : kRubricDims) known = known || d == k;
    if (!known) throw Error(ErrorCode::Config, d, "unknown rubric dimension");
    if (!seen.insert(d).second) throw Error(ErrorCode::Config, d, "duplicate rubric dimension");
  }
  if (s_max < 1) throw Error(ErrorCode::Config, "s_max", "must be >= 1");
  auto nonneg = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::Config, name, "must be finite and >= 0");
  };
  nonneg(lambda_retr, "lambda_retr");
  nonneg(lambda_gain, "lambda_gain");
  nonneg(lambda_proc, "lambda_proc");
  nonneg(terminal_weight, "terminal_weight");
  nonneg(turn_weight, "turn_weight");
  nonneg(alpha_sim, "alpha_sim");
  nonneg(alpha_qual, "alpha_qual");
  for (const auto& [kind, w] : penalty_weights) {
    parse_penalty_kind(kind);
    nonneg(w, "penalty_weights");
  }
}

void to_json(nlohmann::json& j, const RewardConfig& cfg) {
  j = nlohmann::json{{"s_max", cfg.s_max},
                     {"dims", cfg.dims},
                     {"lambda_retr", cfg.lambda_retr},
                     {"lambda_gain", cfg.lambda_gain},
                     {"lambda_proc", cfg.lambda_proc},
                     {"penalty_weights", cfg.penalty_weights},
                     {"terminal_weight", cfg.terminal_weight},
                     {"turn_weight", cfg.turn_weight},
                     {"alpha_sim", cfg.alpha_sim},
                     {"alpha_qual", cfg.alpha_qual}};
}

void from_json(const nlohmann::json& j, RewardConfig& cfg) {
  static const std::set<std::string> keys = {"s_max",       "dims",           "lambda_retr",     "lambda_gain",
                                             "lambda_proc", "penalty_weights", "terminal_weight", "turn_weight",
                                             "alpha_sim",   "alpha_qual"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "reward", "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) throw Error(ErrorCode::Config, "reward." + key, "unknown key");
  }
  RewardConfig out;
  out.s_max = j.value("s_max", out.s_max);
  out.dims = j.value("dims", out.dims);
  out.lambda_retr = j.value("lambda_retr", out.lambda_retr);
  out.lambda_gain = j.value("lambda_gain", out.lambda_gain);
  out.lambda_proc = j.value("lambda_proc", out.lambda_proc);
  out.penalty_weights = j.value("penalty_weights", out.penalty_weights);
  out.terminal_weight = j.value("terminal_weight", out.terminal_weight);
  out.turn_weight = j.value("turn_weight", out.turn_weight);
  out.alpha_sim = j.value("alpha_sim", out.alpha_sim);
  out.alpha_qual = j.value("alpha_qual", out.alpha_qual);
  out.validate();
  cfg = std::move(out);
}

double process_reward(const RubricScores& scores, const RewardConfig& cfg) {
  if (cfg.dims.empty()) throw Error(ErrorCode::EmptyDims);
  double sum = 0.0;
  for (const auto& d : cfg.dims) sum += static_cast<double>(scores.get(d)) / static_cast<double>(cfg.s_max);
  return cfg.lambda_proc * (sum / static_cast<double>(cfg.dims.size()));
}

double retrieval_reward(double rho, const RewardConfig& cfg) { return cfg.lambda_retr * rho; }

double info_gain_reward(std::size_t newly_revealed, const RewardConfig& cfg) {
  return cfg.lambda_gain * static_cast<double>(newly_revealed);
}

double penalty(std::span<const std::string> events, const RewardConfig& cfg) {
  double sum = 0.0;
  for (const auto& e : events) {
    auto it = cfg.penalty_weights.find(e);
    if (it == cfg.penalty_weights.end()) throw Error(ErrorCode::UnknownEventKind, e);
    sum += it->second;
  }
  return sum == 0.0 ? 0.0 : -sum;
}

double penalty(std::span<const PenaltyKind> events, const RewardConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(events.size());
  for (auto e : events) names.emplace_back(to_string(e));
  return penalty(std::span<const std::string>(names), cfg);
}

double terminal_reward(const std::optional<DiagnosisLabel>& predicted, DiagnosisLabel truth,
                       const RewardConfig& cfg) {
  return predicted && *predicted == truth ? cfg.terminal_weight : 0.0;
}

RewardBreakdown make_breakdown(double proc, double retr, double gain, double pen) {
  return {proc, retr, gain, pen, proc + retr + gain + pen};
}

double aggregate(std::span<const RewardBreakdown> turns, double terminal, const RewardConfig& cfg) {
  double sum = 0.0;
  for (const auto& t : turns) sum += t.turn_total;
  return cfg.turn_weight * sum + terminal;
}

std::vector<double> grpo_advantages(std::span<const double> returns) {
  std::vector<double> out(returns.size(), 0.0);
  if (returns.empty()) return out;
  const double n = static_cast<double>(returns.size());
  // Deviations from the first return are unchanged by an exactly representable shift.
  std::vector<double> d(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) d[i] = returns[i] - returns[0];
  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : d) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = (d[i] - mean) / sd;
  return out;
}

}  // namespace mind
