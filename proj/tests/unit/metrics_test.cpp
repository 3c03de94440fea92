// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "generators.hpp"
#include "mind/metrics.hpp"
#include "mind/runner.hpp"
#include "oracles.hpp"

using namespace mind;

namespace {

const HashEmbedder kEmbed;

std::size_t idx(DiagnosisLabel l) { return static_cast<std::size_t>(l); }

std::vector<Prediction> random_preds(std::mt19937_64& g, std::size_t n) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < n; ++i) {
    Prediction p;
    p.truth = gen::label(g);
    if (g() % 6) p.predicted = gen::label(g);
    out.push_back(p);
  }
  return out;
}

std::vector<CaseProfile> balanced(std::mt19937_64& g, std::size_t per_label) {
  std::vector<CaseProfile> out;
  for (auto l : kAllLabels) {
    for (std::size_t i = 0; i < per_label; ++i) {
      auto p = gen::profile(g, std::string(to_string(l)) + std::to_string(i));
      p.label = l;
      out.push_back(p);
    }
  }
  return out;
}

/// Always diagnoses the same label on the first turn.
class Constant final : public Policy {
 public:
  explicit Constant(DiagnosisLabel l) : l_(l) {}
  std::string stage1(const Stage1Request&) override { return "<rag_query>q</rag_query>"; }
  std::string stage2(const Stage2Request&) override {
    return protocol::render(protocol::Stage2Output{"t", Diagnose{l_, ""}});
  }

 private:
  DiagnosisLabel l_;
};

}  // namespace

TEST(Metrics, AgreesWithBruteForceOnRandomSets) {
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 300; ++trial) {
    const auto preds = random_preds(g, 1 + g() % 60);
    const auto r = compute_metrics(preds);
    const auto o = oracle::metrics(preds);
    EXPECT_NEAR(r.accuracy, o.accuracy, 1e-12);
    EXPECT_NEAR(r.macro_f1, o.macro_f1, 1e-12);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(r.per_class[c].precision, o.p[c], 1e-12);
      EXPECT_NEAR(r.per_class[c].recall, o.r[c], 1e-12);
      EXPECT_NEAR(r.per_class[c].f1, o.f1[c], 1e-12);
    }
  }
}

TEST(Metrics, HandCountedClass) {
  // Depression: TP 8, FP 2, FN 2.
  std::vector<Prediction> preds;
  for (int i = 0; i < 8; ++i) preds.push_back({DiagnosisLabel::Depression, DiagnosisLabel::Depression});
  for (int i = 0; i < 2; ++i) preds.push_back({DiagnosisLabel::Anxiety, DiagnosisLabel::Depression});
  for (int i = 0; i < 2; ++i) preds.push_back({DiagnosisLabel::Depression, DiagnosisLabel::Mix});
  const auto& d = compute_metrics(preds).per_class[idx(DiagnosisLabel::Depression)];
  EXPECT_EQ(d.tp, 8u);
  EXPECT_EQ(d.fp, 2u);
  EXPECT_EQ(d.fn, 2u);
  EXPECT_NEAR(d.precision, 0.8, 1e-12);
  EXPECT_NEAR(d.recall, 0.8, 1e-12);
  EXPECT_NEAR(d.f1, 0.8, 1e-12);
}

TEST(Metrics, NoDecisionIsWrongAndEmptyClassesAreZero) {
  const std::vector<Prediction> preds = {{DiagnosisLabel::Mix, std::nullopt}, {DiagnosisLabel::Mix, DiagnosisLabel::Mix}};
  const auto r = compute_metrics(preds);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_EQ(r.confusion[idx(DiagnosisLabel::Mix)][4], 1u);
  EXPECT_DOUBLE_EQ(r.per_class[idx(DiagnosisLabel::Other)].f1, 0.0);
  EXPECT_EQ(compute_metrics({}).n_cases, 0u);
}

TEST(Metrics, OraclePolicyIsPerfect) {
  std::mt19937_64 g(22);
  const auto cases = balanced(g, 5);
  std::map<std::string, DiagnosisLabel> labels;
  for (const auto& c : cases) labels[c.case_id] = c.label;
  Environment env;
  env.embed = &kEmbed;
  const auto r = evaluate(cases, [&] { return std::make_unique<OraclePolicy>(labels); }, env, 2);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
}

TEST(Metrics, ConstantPolicyOnBalancedSet) {
  std::mt19937_64 g(23);
  const auto cases = balanced(g, 6);
  Environment env;
  env.embed = &kEmbed;
  const auto r = evaluate(cases, [] { return std::make_unique<Constant>(DiagnosisLabel::Depression); }, env, 1);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
  EXPECT_DOUBLE_EQ(r.per_class[idx(DiagnosisLabel::Depression)].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[idx(DiagnosisLabel::Depression)].precision, 0.25);
  EXPECT_DOUBLE_EQ(r.per_class[idx(DiagnosisLabel::Anxiety)].recall, 0.0);
}

TEST(Metrics, DocumentedEvalFixture) {
  // Table in eval_trajectories.md.
  const auto r = evaluate(read_trajectories(oracle::fixture_path("eval_trajectories.jsonl")));
  EXPECT_EQ(r.n_cases, 13u);
  EXPECT_NEAR(r.accuracy, 8.0 / 13.0, 1e-12);
  const auto& dep = r.per_class[idx(DiagnosisLabel::Depression)];
  const auto& oth = r.per_class[idx(DiagnosisLabel::Other)];
  EXPECT_NEAR(dep.precision, 0.75, 1e-12);
  EXPECT_NEAR(dep.recall, 0.75, 1e-12);
  EXPECT_NEAR(oth.precision, 1.0, 1e-12);
  EXPECT_NEAR(oth.recall, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class[idx(DiagnosisLabel::Anxiety)].f1, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class[idx(DiagnosisLabel::Mix)].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.macro_f1, (0.75 + 0.5 + 2.0 / 3.0 + 2.0 / 3.0) / 4.0, 1e-12);
  const auto table = format_report(r);
  EXPECT_NE(table.find("61.5"), std::string::npos);
  EXPECT_NE(table.find("64.6"), std::string::npos);
}

TEST(Metrics, JsonReport) {
  const auto j = report_to_json(compute_metrics(std::vector<Prediction>{{DiagnosisLabel::Anxiety, DiagnosisLabel::Anxiety}}));
  EXPECT_DOUBLE_EQ(j.at("accuracy").get<double>(), 1.0);
  EXPECT_EQ(j.at("n_cases").get<std::size_t>(), 1u);
}
