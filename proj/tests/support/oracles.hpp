// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations for tests. None of these call into
// the library code they are used to check.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mind/metrics.hpp"
#include "mind/prb.hpp"
#include "mind/rewards.hpp"
#include "mind/runner.hpp"

namespace oracle {

// ---- protocol: reference grammar walk --------------------------------------------

struct Walk {
  bool clean = false;
  std::optional<std::string> think;
  std::string body;  // rag_query (stage 1) or answer body (stage 2)
  std::optional<std::string> label;  // stage 2 diagnosis
  std::string recommendation;
};

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string strip(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Tokenizes every tag occurrence, then accepts only the exact canonical
/// sequence with whitespace between blocks and non-empty contents.
inline Walk walk(std::string_view raw, int stage) {
  static const std::array<std::string_view, 6> tags = {"<think>",  "</think>",  "<rag_query>",
                                                       "</rag_query>", "<answer>", "</answer>"};
  std::vector<std::pair<std::size_t, int>> found;  // (offset, tag index)
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (int t = 0; t < 6; ++t) {
      if (raw.compare(i, tags[static_cast<std::size_t>(t)].size(), tags[static_cast<std::size_t>(t)]) == 0) {
        found.emplace_back(i, t);
      }
    }
  }
  const int open_body = stage == 1 ? 2 : 4;
  std::vector<int> seq;
  for (auto& f : found) seq.push_back(f.second);
  const std::vector<int> with_think = {0, 1, open_body, open_body + 1};
  const std::vector<int> without_think = {open_body, open_body + 1};
  Walk w;
  const bool has_think = seq == with_think;
  if (!has_think && !(stage == 1 && seq == without_think)) return w;

  auto content = [&](std::size_t k) {
    const auto begin = found[k].first + tags[static_cast<std::size_t>(found[k].second)].size();
    return raw.substr(begin, found[k + 1].first - begin);
  };
  // Outside text: before the first tag, between blocks, after the last tag.
  std::vector<std::string_view> gaps;
  gaps.push_back(raw.substr(0, found.front().first));
  if (has_think) {
    const auto end_think = found[1].first + tags[1].size();
    gaps.push_back(raw.substr(end_think, found[2].first - end_think));
  }
  const auto& last = found.back();
  gaps.push_back(raw.substr(last.first + tags[static_cast<std::size_t>(last.second)].size()));
  for (auto g : gaps) {
    if (!strip(g).empty()) return w;
  }
  if (has_think) {
    w.think = strip(content(0));
    if (w.think->empty()) return w;
  }
  w.body = strip(content(has_think ? 2 : 0));
  if (w.body.empty()) return w;

  if (stage == 2) {
    constexpr std::string_view marker = "<Diagnosis>:";
    if (w.body.rfind(marker, 0) == 0) {
      std::string rest = strip(std::string_view(w.body).substr(marker.size()));
      std::size_t end = 0;
      while (end < rest.size() && !is_space(rest[end]) && rest[end] != '<') ++end;
      const std::string label = rest.substr(0, end);
      if (label != "Depression" && label != "Anxiety" && label != "Mix" && label != "Other") return w;
      w.label = label;
      std::string rec = strip(std::string_view(rest).substr(end));
      constexpr std::string_view rec_marker = "<Recommendation>:";
      if (rec.rfind(rec_marker, 0) == 0) rec = strip(std::string_view(rec).substr(rec_marker.size()));
      w.recommendation = rec;
    }
  }
  w.clean = true;
  return w;
}

// ---- prb: brute-force retrieval ---------------------------------------------------

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return std::min(1.0, std::max(-1.0, s));
}

/// Full sort of every eligible entry by (cosine desc, id asc); first k ids.
inline std::vector<std::pair<std::string, double>> brute_topk(const std::vector<mind::prb::PRBEntry>& entries,
                                                              const std::vector<double>& query, std::size_t k,
                                                              bool include_flagged = false) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& e : entries) {
    if (e.state_vec.zero) continue;
    if (!include_flagged && (e.meta.hard_flags[0] || e.meta.hard_flags[1] || e.meta.hard_flags[2])) continue;
    all.emplace_back(e.entry_id, dot(e.state_vec.values, query));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// ---- rewards: return recomputation from logged primitives -------------------------

inline double rubric_value(const mind::RubricScores& s, const std::string& dim) {
  if (dim == "sym") return s.sym;
  if (dim == "diff") return s.diff;
  if (dim == "dec") return s.dec;
  if (dim == "emp") return s.emp;
  return s.nat;
}

struct TurnOracle {
  double proc, retr, gain, pen, total;
};

inline TurnOracle turn_reward(const mind::TurnRecord& t, const mind::RewardConfig& cfg) {
  TurnOracle o{};
  double sum = 0.0;
  for (const auto& d : cfg.dims) sum += rubric_value(t.rubric, d) / static_cast<double>(cfg.s_max);
  o.proc = cfg.lambda_proc * (sum / static_cast<double>(cfg.dims.size()));
  double rho = 0.0;
  if (!t.hits.empty()) {
    double max_sim = t.hits.front().similarity;
    double q = 0.0;
    for (const auto& h : t.hits) {
      max_sim = std::max(max_sim, h.similarity);
      q += h.quality / 5.0;
    }
    rho = cfg.alpha_sim * max_sim + cfg.alpha_qual * (q / static_cast<double>(t.hits.size()));
  }
  o.retr = cfg.lambda_retr * rho;
  o.gain = cfg.lambda_gain * static_cast<double>(t.newly_revealed);
  double pen = 0.0;
  for (const auto& p : t.penalties) pen += cfg.penalty_weights.at(p);
  o.pen = -pen;
  o.total = o.proc + o.retr + o.gain + o.pen;
  return o;
}

inline double episode_return(const mind::Trajectory& t, const mind::RewardConfig& cfg) {
  double sum = 0.0;
  for (const auto& turn : t.turns) sum += turn_reward(turn, cfg).total;
  const double terminal = (t.final_diagnosis && *t.final_diagnosis == t.label) ? cfg.terminal_weight : 0.0;
  return cfg.turn_weight * sum + terminal;
}

// ---- metrics: brute force from the confusion matrix --------------------------------

struct Metrics {
  double accuracy = 0.0;
  std::array<double, 4> p{}, r{}, f1{};
  double macro_f1 = 0.0;
};

inline Metrics metrics(const std::vector<mind::Prediction>& preds) {
  // confusion[truth][pred], pred 4 = no decision
  std::array<std::array<double, 5>, 4> c{};
  for (const auto& p : preds) {
    const auto col = p.predicted ? static_cast<std::size_t>(*p.predicted) : 4u;
    c[static_cast<std::size_t>(p.truth)][col] += 1.0;
  }
  Metrics m;
  double correct = 0.0;
  for (std::size_t k = 0; k < 4; ++k) correct += c[k][k];
  m.accuracy = preds.empty() ? 0.0 : correct / static_cast<double>(preds.size());
  for (std::size_t k = 0; k < 4; ++k) {
    double predicted_k = 0.0;
    double truth_k = 0.0;
    for (std::size_t i = 0; i < 4; ++i) predicted_k += c[i][k];
    for (std::size_t j = 0; j < 5; ++j) truth_k += c[k][j];
    m.p[k] = predicted_k == 0.0 ? 0.0 : c[k][k] / predicted_k;
    m.r[k] = truth_k == 0.0 ? 0.0 : c[k][k] / truth_k;
    m.f1[k] = (m.p[k] + m.r[k]) == 0.0 ? 0.0 : 2.0 * m.p[k] * m.r[k] / (m.p[k] + m.r[k]);
  }
  m.macro_f1 = (m.f1[0] + m.f1[1] + m.f1[2] + m.f1[3]) / 4.0;
  return m;
}

// ---- fixtures ----------------------------------------------------------------------

/// Gaussian direction scaled to unit length.
inline std::vector<double> random_unit(std::mt19937_64& g, std::size_t dims) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dims);
  double s = 0.0;
  for (auto& x : v) {
    x = n(g);
    s += x * x;
  }
  s = std::sqrt(s);
  for (auto& x : v) x /= s;
  return v;
}

inline std::string fixture_path(std::string_view name) { return std::string(MIND_FIXTURE_DIR) + "/" + std::string(name); }

}  // namespace oracle
