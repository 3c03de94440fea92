// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/toy.hpp"

using namespace mind;

namespace {

TrainerConfig quick(std::uint64_t seed) {
  TrainerConfig c;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(ToyState, DistinctEncodings) {
  std::set<ToyState> seen;
  std::array<int, kToyFields.size()> fields{};
  for (std::size_t turn : {0u, 4u, 8u}) {
    for (int v = 0; v < 4; ++v) {
      fields[2] = v;
      EXPECT_TRUE(seen.insert(toy_state(fields, turn)).second);
    }
  }
  EXPECT_EQ(toy_state(fields, 12), toy_state(fields, 40));
}

TEST(ToyCases, BalancedAndCuedInTheSymptomField) {
  const auto cases = toy_cases(20);
  ASSERT_EQ(cases.size(), 20u);
  std::array<int, 4> counts{};
  for (const auto& c : cases) {
    ++counts[static_cast<std::size_t>(c.label)];
    int symptom_cues = 0;
    for (const auto& cue : c.implicit_cues) symptom_cues += cue.field == CueField::symptom;
    EXPECT_EQ(symptom_cues, 2);
  }
  EXPECT_EQ(counts, (std::array<int, 4>{5, 5, 5, 5}));
}

TEST(ToyPolicy, UniformAtStartAndProbabilitiesNormalized) {
  ToyPolicy p;
  const auto pr = p.probs(0);
  for (double x : pr) EXPECT_NEAR(x, 1.0 / kToyActions, 1e-15);
  ToyPolicy::Logits d{};
  d[3] = 2.0;
  p.add(0, d);
  double sum = 0.0;
  for (double x : p.probs(0)) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(p.greedy(0), 3u);
}

TEST(ToyEpisode, ReturnIsTerminalPlusTurns) {
  ToyPolicy p;
  Rng rng(3);
  const RewardConfig reward;
  for (const auto& c : toy_cases(8)) {
    const auto ep = run_toy_episode(p, c, reward, 10, ToyMode::Sample, rng);
    double sum = ep.terminal;
    for (const auto& t : ep.turns) sum += t.turn_total;
    EXPECT_NEAR(ep.ret, sum, 1e-12);
    EXPECT_LE(ep.steps.size(), 10u);
    EXPECT_EQ(ep.terminal, ep.diagnosis == c.label ? reward.terminal_weight : 0.0);
  }
}

TEST(Trainer, LearnsAboveThreshold) {
  ToyPolicy p;
  const auto r = train_toy_grpo(toy_cases(20), p, quick(1), RewardConfig{});
  EXPECT_TRUE(r.threshold_met);
  EXPECT_GE(r.smoothed_accuracy, 0.9);
  EXPECT_EQ(r.curve.size(), 300u);
  EXPECT_LT(r.curve.front().accuracy, 0.6);
}

TEST(Trainer, ZeroLearningRateStaysFlat) {
  ToyPolicy p;
  auto cfg = quick(1);
  cfg.lr = 0.0;
  cfg.iters = 60;
  const auto r = train_toy_grpo(toy_cases(20), p, cfg, RewardConfig{});
  EXPECT_FALSE(r.threshold_met);
  for (const auto& [s, z] : p.table()) {
    for (double x : z) EXPECT_EQ(x, 0.0);
  }
}

TEST(Trainer, DeterministicPerSeed) {
  ToyPolicy a, b;
  auto cfg = quick(5);
  cfg.iters = 30;
  EXPECT_EQ(curve_csv(train_toy_grpo(toy_cases(20), a, cfg, RewardConfig{}).curve),
            curve_csv(train_toy_grpo(toy_cases(20), b, cfg, RewardConfig{}).curve));
}

TEST(TrainerConfig, ValidationAndJson) {
  TrainerConfig c;
  c.group_size = 1;
  EXPECT_THROW(c.validate(), Error);
  c = TrainerConfig{};
  c.clip_range = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainerConfig{};
  c.lr = std::nan("");
  EXPECT_THROW(c.validate(), Error);
  c = TrainerConfig{};
  c.iters = 12;
  c.seed = 77;
  EXPECT_EQ(nlohmann::json(c).get<TrainerConfig>(), c);
}

TEST(CurveCsv, HeaderAndRows) {
  const auto csv = curve_csv({{0, 1.5, 0.25}, {1, 2.0, 0.5}});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,mean_return,accuracy");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Trainer, SmoothedReturnImprovesMonotonically) {
  // Non-overlapping 50-iteration block means of the mean return, fixed seed.
  ToyPolicy p;
  const auto r = train_toy_grpo(toy_cases(20), p, quick(1), RewardConfig{});
  std::vector<double> blocks;
  for (std::size_t b = 0; b + 50 <= r.curve.size(); b += 50) {
    double s = 0.0;
    for (std::size_t i = b; i < b + 50; ++i) s += r.curve[i].mean_return;
    blocks.push_back(s / 50.0);
  }
  ASSERT_EQ(blocks.size(), 6u);
  for (std::size_t i = 0; i + 1 < blocks.size(); ++i) EXPECT_LE(blocks[i], blocks[i + 1]) << "block " << i;
  EXPECT_GT(blocks.back() - blocks.front(), 3.0);
}
