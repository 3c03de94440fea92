// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mind/clients.hpp"

namespace mind {

inline constexpr int kDefaultSMax = 5;

struct RubricScores {
  int sym = 0;
  int diff = 0;
  int dec = 0;
  int emp = 0;
  int nat = 0;
  int s_max = kDefaultSMax;

  /// Score for a dimension name ("sym", "diff", "dec", "emp", "nat"). Error{Config} otherwise.
  int get(std::string_view dim) const;
  bool in_range() const noexcept;

  friend bool operator==(const RubricScores&, const RubricScores&) = default;
};

struct FaithfulnessScores {
  double fc = 0.0;
  double sg = 0.0;
  double pf = 0.0;
  double avg = 0.0;

  friend bool operator==(const FaithfulnessScores&, const FaithfulnessScores&) = default;
};

inline constexpr std::string_view kRubricDims[] = {"sym", "diff", "dec", "emp", "nat"};

/// "sym=3 diff=4 dec=5 emp=4 nat=4". Missing or out-of-range values give all zeros.
RubricScores parse_rubric_reply(std::string_view reply, int s_max = kDefaultSMax);
/// "FC=8.6 SG=8.8 PF=8.3". Missing or out-of-range values give (0,0,0).
FaithfulnessScores parse_faithfulness_reply(std::string_view reply);

std::vector<ChatTurnMsg> rubric_prompt(std::string_view history_summary, std::string_view think,
                                       std::string_view answer, const std::vector<std::string>& supports,
                                       int s_max = kDefaultSMax);
std::vector<ChatTurnMsg> faithfulness_prompt(std::string_view dialogue, const std::vector<std::string>& supports);

/// Error{EmptyState} when think is empty.
RubricScores score_turn(std::string_view history_summary, std::string_view think, std::string_view answer,
                        const std::vector<std::string>& supports, ChatClient& chat, int s_max = kDefaultSMax);
/// Error{EmptyHits} when supports is empty.
FaithfulnessScores score_support_faithfulness(std::string_view dialogue, const std::vector<std::string>& supports,
                                              ChatClient& chat);

/// Offline keyword rubric.
///   sym  - distinct cue fields named in think, capped at s_max
///   diff - s_max when think names any diagnosis label
///   dec  - s_max when the answer's topic token occurs in think
///   emp  - empathy phrases in the answer, capped
///   nat  - satisfied surface checks on the answer
RubricScores mock_judge_rule(std::string_view think, std::string_view answer,
                             const std::vector<std::string>& supports, int s_max = kDefaultSMax);

/// Longest alphanumeric token of the answer, lowercased; the label for a diagnosis.
std::string answer_topic(std::string_view answer);

class TurnJudge {
 public:
  virtual ~TurnJudge() = default;
  virtual RubricScores score(std::string_view history_summary, std::string_view think, std::string_view answer,
                             const std::vector<std::string>& supports) = 0;
};

class MockJudge final : public TurnJudge {
 public:
  explicit MockJudge(int s_max = kDefaultSMax) : s_max_(s_max) {}
  RubricScores score(std::string_view, std::string_view think, std::string_view answer,
                     const std::vector<std::string>& supports) override {
    return mock_judge_rule(think, answer, supports, s_max_);
  }

 private:
  int s_max_;
};

class ChatJudge final : public TurnJudge {
 public:
  ChatJudge(ChatClient& chat, int s_max = kDefaultSMax) : chat_(chat), s_max_(s_max) {}
  RubricScores score(std::string_view history_summary, std::string_view think, std::string_view answer,
                     const std::vector<std::string>& supports) override;

 private:
  ChatClient& chat_;
  int s_max_;
};

}  // namespace mind
