// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/rewards.hpp"

using namespace mind;

namespace {

RewardConfig unit_proc() {
  RewardConfig c;
  c.lambda_proc = 1.0;
  return c;
}

double pop_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

TEST(ProcessReward, Fixtures) {
  EXPECT_DOUBLE_EQ(process_reward({5, 5, 5, 0, 0, 5}, unit_proc()), 1.0);
  EXPECT_DOUBLE_EQ(process_reward({}, unit_proc()), 0.0);
  EXPECT_NEAR(process_reward({3, 4, 5, 0, 0, 5}, unit_proc()), 0.8, 1e-15);
}

TEST(ProcessReward, OptionalDimsAndBounds) {
  auto c = unit_proc();
  c.dims = {"emp", "nat"};
  EXPECT_DOUBLE_EQ(process_reward({0, 0, 0, 5, 0, 5}, c), 0.5);
  c.dims.clear();
  EXPECT_THROW(c.validate(), Error);
  const RewardConfig d;
  std::mt19937_64 g(1);
  for (int i = 0; i < 1000; ++i) {
    RubricScores s{int(g() % 6), int(g() % 6), int(g() % 6), int(g() % 6), int(g() % 6), 5};
    const double r = process_reward(s, d);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, d.lambda_proc);
  }
}

TEST(RetrievalReward, Fixtures) {
  RewardConfig c;
  c.lambda_retr = 0.5;
  EXPECT_DOUBLE_EQ(retrieval_reward(0.8, c), 0.4);
  EXPECT_DOUBLE_EQ(retrieval_reward(0.0, c), 0.0);
  c.lambda_retr = 0.0;
  EXPECT_DOUBLE_EQ(retrieval_reward(0.9, c), 0.0);
}

TEST(InfoGainReward, FixturesAndLinearity) {
  const RewardConfig c;
  EXPECT_DOUBLE_EQ(info_gain_reward(2, c), 0.01);
  EXPECT_DOUBLE_EQ(info_gain_reward(0, c), 0.0);
  EXPECT_DOUBLE_EQ(info_gain_reward(5, c), 0.025);
  for (std::size_t a = 0; a < 20; ++a) {
    for (std::size_t b = 0; b < 20; ++b) {
      EXPECT_NEAR(info_gain_reward(a + b, c), info_gain_reward(a, c) + info_gain_reward(b, c), 1e-15);
    }
  }
}

TEST(Penalty, SignedSum) {
  const RewardConfig c;
  const std::vector<PenaltyKind> one = {PenaltyKind::format};
  const std::vector<PenaltyKind> two = {PenaltyKind::format, PenaltyKind::loop};
  EXPECT_DOUBLE_EQ(penalty(one, c), -0.1);
  EXPECT_DOUBLE_EQ(penalty(std::span<const PenaltyKind>{}, c), 0.0);
  EXPECT_DOUBLE_EQ(penalty(two, c), -0.2);
}

TEST(Penalty, UnknownEventKind) {
  const RewardConfig c;
  const std::vector<std::string> events = {"format", "timeout"};
  try {
    penalty(std::span<const std::string>(events), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownEventKind);
    EXPECT_EQ(e.subject(), "timeout");
  }
}

TEST(TerminalReward, Fixtures) {
  const RewardConfig c;
  EXPECT_DOUBLE_EQ(terminal_reward(DiagnosisLabel::Depression, DiagnosisLabel::Depression, c), 5.0);
  EXPECT_DOUBLE_EQ(terminal_reward(DiagnosisLabel::Anxiety, DiagnosisLabel::Mix, c), 0.0);
  EXPECT_DOUBLE_EQ(terminal_reward(std::nullopt, DiagnosisLabel::Mix, c), 0.0);
}

TEST(Aggregate, Fixtures) {
  RewardConfig c;
  const std::vector<RewardBreakdown> turns = {make_breakdown(0.8, 0, 0, 0), make_breakdown(0, 0, 0.01, 0),
                                              make_breakdown(0, 0, 0, -0.1)};
  EXPECT_NEAR(aggregate(turns, 5.0, c), 5.71, 1e-12);
  EXPECT_DOUBLE_EQ(aggregate({}, 0.0, c), 0.0);
  c.turn_weight = 0.0;
  EXPECT_DOUBLE_EQ(aggregate(turns, 5.0, c), 5.0);
}

TEST(Aggregate, LinearInTurnWeight) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<RewardBreakdown> turns;
    for (int t = 0; t < 5; ++t) turns.push_back(make_breakdown(u(g), u(g), u(g), u(g)));
    RewardConfig c;
    c.turn_weight = 0.0;
    const double r0 = aggregate(turns, 2.0, c);
    c.turn_weight = 1.0;
    const double r1 = aggregate(turns, 2.0, c);
    c.turn_weight = 3.0;
    EXPECT_NEAR(aggregate(turns, 2.0, c) - r0, 3.0 * (r1 - r0), 1e-12);
  }
}

TEST(Breakdown, TurnTotalIsSum) {
  const auto b = make_breakdown(0.004, 0.0075, 0.01, -0.2);
  EXPECT_NEAR(b.turn_total, 0.004 + 0.0075 + 0.01 - 0.2, 1e-12);
}

TEST(Grpo, Fixtures) {
  EXPECT_EQ(grpo_advantages(std::vector<double>{1, 1, 1}), (std::vector<double>{0, 0, 0}));
  EXPECT_EQ(grpo_advantages(std::vector<double>{0, 2}), (std::vector<double>{-1, 1}));
  EXPECT_EQ(grpo_advantages(std::vector<double>{4.2}), (std::vector<double>{0}));
}

TEST(Grpo, NormalizedAndShiftInvariant) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + g() % 15);
    for (auto& x : r) x = u(g);
    const auto a = grpo_advantages(r);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size()), 0.0, 1e-9);
    EXPECT_NEAR(pop_std(a), 1.0, 1e-9);
    auto shifted = r;
    for (auto& x : shifted) x += 0.5;
    const auto b = grpo_advantages(shifted);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
    auto scaled = r;
    for (auto& x : scaled) x *= 3.0;
    const auto s = grpo_advantages(scaled);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) EXPECT_EQ(a[k] < a[k + 1], s[k] < s[k + 1]);
  }
}

TEST(RewardConfigJson, RoundTripAndUnknownKeys) {
  RewardConfig c;
  c.dims = {"sym", "emp"};
  c.penalty_weights["loop"] = 0.3;
  const nlohmann::json j = c;
  EXPECT_EQ(j.get<RewardConfig>(), c);
  auto bad = j;
  bad["lambda_typo"] = 1.0;
  EXPECT_THROW((void)bad.get<RewardConfig>(), Error);
}

TEST(RewardConfig, DefaultsMatchTheWeightTable) {
  const RewardConfig c;
  EXPECT_EQ(c.s_max, 5);
  EXPECT_EQ(c.dims, (std::vector<std::string>{"sym", "diff", "dec"}));
  EXPECT_EQ(c.lambda_gain, 0.005);
  EXPECT_EQ(c.lambda_proc, 0.01);
  EXPECT_EQ(c.penalty_weights.at("format"), 0.1);
  EXPECT_EQ(c.terminal_weight, 5.0);
  EXPECT_EQ(c.turn_weight, 1.0);
}
