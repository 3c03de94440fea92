// SPDX-License-Identifier: Apache-2.0
#include "mind/metrics.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace mind {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EvalReport compute_metrics(std::span<const Prediction> predictions) {
  EvalReport r;
  r.n_cases = predictions.size();
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    const auto truth = static_cast<std::size_t>(p.truth);
    const std::size_t col = p.predicted ? static_cast<std::size_t>(*p.predicted) : 4;
    ++r.confusion[truth][col];
    if (p.predicted && *p.predicted == p.truth) ++correct;
  }
  r.accuracy = ratio(correct, r.n_cases);
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    auto& m = r.per_class[c];
    m.tp = r.confusion[c][c];
    for (std::size_t k = 0; k < 5; ++k) {
      if (k != c) m.fn += r.confusion[c][k];
    }
    for (std::size_t t = 0; t < 4; ++t) {
      if (t != c) m.fp += r.confusion[t][c];
    }
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    f1_sum += m.f1;
  }
  r.macro_f1 = f1_sum / 4.0;
  return r;
}

EvalReport evaluate(const std::vector<Trajectory>& trajectories) {
  std::vector<Prediction> preds;
  preds.reserve(trajectories.size());
  for (const auto& t : trajectories) preds.push_back({t.label, t.final_diagnosis});
  return compute_metrics(preds);
}

EvalReport evaluate(const std::vector<CaseProfile>& cases, const PolicyFactory& make_policy, const Environment& env,
                    std::size_t workers) {
  return evaluate(run_batch(cases, make_policy, env, workers));
}

std::string format_report(const EvalReport& report) {
  std::string out = "Class        P(%)    R(%)    F1(%)\n";
  char line[128];
  for (auto label : kAllLabels) {
    const auto& m = report.per_class[static_cast<std::size_t>(label)];
    std::snprintf(line, sizeof line, "%-10s %6.1f  %6.1f  %6.1f\n", std::string(to_string(label)).c_str(),
                  100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1);
    out += line;
  }
  std::snprintf(line, sizeof line, "Acc %.1f  macro-F1 %.1f  n=%zu\n", 100.0 * report.accuracy,
                100.0 * report.macro_f1, report.n_cases);
  out += line;
  return out;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (auto label : kAllLabels) {
    const auto& m = report.per_class[static_cast<std::size_t>(label)];
    per_class[std::string(to_string(label))] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                                                {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn}};
  }
  nlohmann::json confusion = nlohmann::json::object();
  for (auto label : kAllLabels) {
    confusion[std::string(to_string(label))] = report.confusion[static_cast<std::size_t>(label)];
  }
  return {{"n_cases", report.n_cases}, {"accuracy", report.accuracy}, {"macro_f1", report.macro_f1},
          {"per_class", per_class},    {"confusion", confusion},      {"confusion_columns",
                                                                        {"Depression", "Anxiety", "Mix", "Other",
                                                                         "NoDecision"}}};
}

}  // namespace mind
