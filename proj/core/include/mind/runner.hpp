// SPDX-License-Identifier: Apache-2.0
//
// Episode orchestration: stage-1 query, retrieval and gating, stage-2 with
// rectification, judging, patient reply and the reward breakdown per turn.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mind/clients.hpp"
#include "mind/judge.hpp"
#include "mind/patientsim.hpp"
#include "mind/prb.hpp"
#include "mind/protocol.hpp"
#include "mind/rectify.hpp"
#include "mind/rewards.hpp"
#include "mind/types.hpp"

namespace mind {

inline constexpr std::string_view kTrajectorySchema = "traj-v1";

struct EpisodeConfig {
  int max_turns = 10;
  int top_k = 5;
  double support_injection_prob = 0.33;
  double gating_threshold = 0.70;
  GenParams doctor_gen = GenParams::doctor();
  GenParams patient_gen = GenParams::patient();
  std::uint64_t seed = 0;

  /// Error{Config}.
  void validate() const;
  friend bool operator==(const EpisodeConfig&, const EpisodeConfig&) = default;
};

void to_json(nlohmann::json& j, const EpisodeConfig& cfg);
void from_json(const nlohmann::json& j, EpisodeConfig& cfg);
void to_json(nlohmann::json& j, const GenParams& p);
void from_json(const nlohmann::json& j, GenParams& p);

// ---- policies -------------------------------------------------------------------

struct EpisodeInfo {
  std::string case_id;
  std::uint64_t seed = 0;
  std::string opening;
};

struct Stage1Request {
  const DialogueHistory& history;
  std::size_t turn = 0;
  std::size_t max_turns = 0;
};

struct Stage2Request {
  const DialogueHistory& history;
  std::size_t turn = 0;
  std::size_t max_turns = 0;
  std::string rag_query;
  std::vector<std::string> supports;  // empty unless injected
  std::string constraint_note;        // set on retries
  int attempt = 0;
};

/// Produces raw tagged text for both stages. One instance per episode.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(const EpisodeInfo& /*info*/) {}
  virtual std::string stage1(const Stage1Request& req) = 0;
  virtual std::string stage2(const Stage2Request& req) = 0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

/// Replays fixed stage-2 texts in call order (retries included); the last
/// one repeats. Stage 1 summarizes the history unless texts are given.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<std::string> stage2_texts, std::vector<std::string> stage1_texts = {});
  static std::unique_ptr<ScriptedPolicy> from_actions(const std::vector<Action>& actions);

  std::string stage1(const Stage1Request& req) override;
  std::string stage2(const Stage2Request& req) override;

 private:
  std::vector<std::string> stage1_;
  std::vector<std::string> stage2_;
  std::size_t next1_ = 0;
  std::size_t next2_ = 0;
};

/// Rule interviewer: asks one field at a time in a fixed order, then
/// diagnoses from symptom keywords in the patient's answers.
class RulePolicy final : public Policy {
 public:
  explicit RulePolicy(std::size_t questions = 6);

  std::string stage1(const Stage1Request& req) override;
  std::string stage2(const Stage2Request& req) override;

  /// Keyword diagnosis over patient utterances; negated sentences are ignored.
  static DiagnosisLabel diagnose_from(const DialogueHistory& history);

 private:
  std::size_t questions_;
  std::size_t skip_ = 0;
};

/// Diagnoses the ground-truth label on the first turn. Evaluation fixture only.
class OraclePolicy final : public Policy {
 public:
  explicit OraclePolicy(std::map<std::string, DiagnosisLabel> labels) : labels_(std::move(labels)) {}
  void begin_episode(const EpisodeInfo& info) override { case_id_ = info.case_id; }
  std::string stage1(const Stage1Request& req) override;
  std::string stage2(const Stage2Request& req) override;

 private:
  std::map<std::string, DiagnosisLabel> labels_;
  std::string case_id_;
};

/// Remote interviewer behind a chat client.
class ChatPolicy final : public Policy {
 public:
  ChatPolicy(ChatClient& chat, GenParams params) : chat_(chat), params_(params) {}
  void begin_episode(const EpisodeInfo& info) override { case_id_ = info.case_id; }
  std::string stage1(const Stage1Request& req) override;
  std::string stage2(const Stage2Request& req) override;

 private:
  ChatClient& chat_;
  GenParams params_;
  std::string case_id_;
};

/// Question that routes to exactly `field` under the builtin routing table.
std::string_view field_question(CueField field) noexcept;

/// Doctor/Patient transcript of the history.
std::string transcript(const DialogueHistory& history);
/// Retrieval state derived from the transcript.
std::string history_summary(const DialogueHistory& history);

// ---- trajectory -----------------------------------------------------------------

struct HitRecord {
  std::string entry_id;
  double similarity = 0.0;
  int quality = 0;
  friend bool operator==(const HitRecord&, const HitRecord&) = default;
};

struct AttemptRecord {
  std::string raw;
  std::vector<UtilityEvent> events;
  std::string decision;
  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

struct TurnRecord {
  std::size_t turn = 0;
  std::string stage1_raw;
  std::size_t stage1_violations = 0;
  std::string rag_query;
  std::vector<HitRecord> hits;
  double rho = 0.0;
  bool gated = false;
  bool injected = false;
  std::vector<AttemptRecord> attempts;
  std::string stage2_raw;  // accepted output; empty for a fallback turn
  std::optional<std::string> fallback_entry;
  std::optional<Action> action;
  RubricScores rubric;
  std::vector<std::string> penalties;
  std::string patient_utterance;
  std::vector<std::string> revealed;
  std::size_t newly_revealed = 0;
  RewardBreakdown reward;

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct Trajectory {
  std::string case_id;
  DiagnosisLabel label = DiagnosisLabel::Other;
  std::uint64_t seed = 0;
  std::string sim_mode = "std";
  std::vector<TurnRecord> turns;
  std::optional<DiagnosisLabel> final_diagnosis;
  double terminal = 0.0;
  double episode_return = 0.0;
  bool complete = true;
  std::string error;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

std::string to_jsonl_line(const Trajectory& t);
/// Error{Parse} naming the line number on a malformed or wrong-schema line.
std::vector<Trajectory> read_trajectories(const std::string& path);

/// Recomputes every component from the logged primitives and compares with
/// the logged breakdowns, terminal and return. Error{Mismatch} beyond 1e-9.
double recompute_return(const Trajectory& t, const RewardConfig& cfg);

// ---- episodes -------------------------------------------------------------------

/// Shared, read-only inputs of a batch of episodes.
struct Environment {
  const prb::PrbIndex* index = nullptr;
  const Embedder* embed = nullptr;
  const FieldRouter* router = &FieldRouter::builtin();
  const PriorTable* priors = &PriorTable::builtin();
  RewardConfig reward;
  EpisodeConfig episode;
  RectifyConfig rectify;
  SimMode::Kind sim = SimMode::Kind::Std;
  /// Judge per episode; defaults to the mock rubric.
  std::function<std::unique_ptr<TurnJudge>()> make_judge;
};

Trajectory run_episode(Policy& policy, PatientSimulator& sim, const CaseProfile& profile, TurnJudge& judge,
                       const Environment& env);
/// Builds the simulator and judge from the environment.
Trajectory run_case(Policy& policy, const CaseProfile& profile, const Environment& env);

/// Runs every case with up to `workers` threads; results keep case order.
std::vector<Trajectory> run_batch(const std::vector<CaseProfile>& cases, const PolicyFactory& make_policy,
                                  const Environment& env, std::size_t workers);

}  // namespace mind
