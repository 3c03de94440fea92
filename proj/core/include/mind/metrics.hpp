// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mind/runner.hpp"
#include "mind/types.hpp"

namespace mind {

struct Prediction {
  DiagnosisLabel truth = DiagnosisLabel::Other;
  std::optional<DiagnosisLabel> predicted;  // nullopt: no decision within the budget
};

struct ClassMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t n_cases = 0;
  double accuracy = 0.0;
  std::array<ClassMetrics, 4> per_class{};  // indexed by DiagnosisLabel
  double macro_f1 = 0.0;
  /// Rows: truth. Columns: the four labels, then no decision.
  std::array<std::array<std::size_t, 5>, 4> confusion{};
};

/// Ratios with 0/0 taken as 0. No decision is wrong for every class.
EvalReport compute_metrics(std::span<const Prediction> predictions);
EvalReport evaluate(const std::vector<Trajectory>& trajectories);
/// One episode per case through the batch runner.
EvalReport evaluate(const std::vector<CaseProfile>& cases, const PolicyFactory& make_policy, const Environment& env,
                    std::size_t workers);

/// Four-class P/R/F1 table in percent plus Acc and macro-F1.
std::string format_report(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

}  // namespace mind
