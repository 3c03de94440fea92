// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cstdio>
#include <random>

#include "mind/metrics.hpp"
#include "mind/prb.hpp"
#include "mind/protocol.hpp"
#include "mind/rewards.hpp"
#include "mind/runner.hpp"
#include "mind/toy.hpp"

using namespace mind;

namespace {

std::vector<double> unit(std::mt19937_64& g, std::size_t dims) {
  std::normal_distribution<double> n;
  std::vector<double> v(dims);
  for (auto& x : v) x = n(g);
  return v;
}

prb::PrbIndex bank(std::size_t n, std::size_t dims) {
  std::mt19937_64 g(1);
  std::vector<prb::PRBEntry> es;
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "e%06zu", i);
    prb::PRBEntry e;
    e.entry_id = id;
    e.state_text = "s";
    e.state_vec = EmbeddingVector::normalized(unit(g, dims));
    e.support_text = "r";
    e.ref_inquiry = "q?";
    e.meta.quality = 1 + static_cast<int>(i % 5);
    es.push_back(std::move(e));
  }
  return prb::PrbIndex(std::move(es), dims, "bench");
}

CaseProfile profile(std::size_t i) {
  CaseProfile p;
  p.case_id = "b" + std::to_string(i);
  p.label = kAllLabels[i % 4];
  p.explicit_cues = {{"c1", CueField::complaint, "feeling low and worried", CueStatus::present}};
  p.implicit_cues = {{"c2", CueField::duration, "about 12 weeks", CueStatus::present},
                     {"c3", CueField::sleep, "early waking", CueStatus::present},
                     {"c4", CueField::symptom, "loss of interest", CueStatus::present}};
  return p;
}

}  // namespace

static void BM_Retrieve(benchmark::State& state) {
  const auto idx = bank(static_cast<std::size_t>(state.range(0)), 256);
  std::mt19937_64 g(2);
  const auto q = EmbeddingVector::normalized(unit(g, 256));
  for (auto _ : state) benchmark::DoNotOptimize(prb::retrieve(idx, q, static_cast<std::size_t>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Retrieve)->Args({1000, 5})->Args({10000, 5})->Args({10000, 50});

static void BM_HashEmbed(benchmark::State& state) {
  const HashEmbedder e;
  const std::string text = "symptoms: low mood, poor sleep; duration: about 12 weeks; risk: not mentioned/unclear";
  for (auto _ : state) benchmark::DoNotOptimize(e.embed(text));
}
BENCHMARK(BM_HashEmbed);

static void BM_ParseStage2(benchmark::State& state) {
  const auto text = protocol::render(protocol::Stage2Output{
      "Low mood for weeks; sleep and risk are still unknown. Depression and Mix remain possible.",
      Diagnose{DiagnosisLabel::Mix, "Refer for a structured assessment and follow up in two weeks."}});
  for (auto _ : state) benchmark::DoNotOptimize(protocol::parse_stage2(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseStage2);

static void BM_Episode(benchmark::State& state) {
  const HashEmbedder embed;
  const auto idx = bank(2000, embed.dims());
  Environment env;
  env.embed = &embed;
  env.index = &idx;
  std::size_t i = 0;
  for (auto _ : state) {
    RulePolicy policy;
    benchmark::DoNotOptimize(run_case(policy, profile(i++), env));
  }
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMicrosecond);

static void BM_GrpoAdvantages(benchmark::State& state) {
  std::mt19937_64 g(3);
  const auto r = unit(g, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(grpo_advantages(r));
}
BENCHMARK(BM_GrpoAdvantages)->Arg(8)->Arg(64);

static void BM_ToyTraining(benchmark::State& state) {
  TrainerConfig cfg;
  cfg.iters = 20;
  const auto cases = toy_cases(20);
  for (auto _ : state) {
    ToyPolicy policy;
    benchmark::DoNotOptimize(train_toy_grpo(cases, policy, cfg, RewardConfig{}));
  }
}
BENCHMARK(BM_ToyTraining)->Unit(benchmark::kMillisecond);

static void BM_Metrics(benchmark::State& state) {
  std::mt19937_64 g(4);
  std::vector<Prediction> preds(10000);
  for (auto& p : preds) {
    p.truth = kAllLabels[g() % 4];
    p.predicted = kAllLabels[g() % 4];
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_metrics(preds));
}
BENCHMARK(BM_Metrics);

BENCHMARK_MAIN();
