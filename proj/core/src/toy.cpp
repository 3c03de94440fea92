// SPDX-License-Identifier: Apache-2.0
#include "mind/toy.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/judge.hpp"
#include "mind/protocol.hpp"
#include "mind/runner.hpp"

namespace mind {

void TrainerConfig::validate() const {
  auto fail = [](const char* key, const char* what) { throw Error(ErrorCode::Config, key, what); };
  if (iters < 1) fail("trainer.iters", "must be >= 1");
  if (group_size < 2) fail("trainer.group_size", "group-relative advantages need at least 2 samples");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("trainer.lr", "must be finite and >= 0");
  if (!(kl_coeff >= 0.0)) fail("trainer.kl_coeff", "must be >= 0");
  if (!(clip_range > 0.0 && clip_range < 1.0)) fail("trainer.clip_range", "must be in (0, 1)");
  if (!(entropy_coeff >= 0.0)) fail("trainer.entropy_coeff", "must be >= 0");
  if (update_epochs < 1) fail("trainer.update_epochs", "must be >= 1");
  if (n_cases < 1) fail("trainer.n_cases", "must be >= 1");
  if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0)) fail("trainer.accuracy_threshold", "must be in [0, 1]");
  if (smoothing_window < 1) fail("trainer.smoothing_window", "must be >= 1");
}

void to_json(nlohmann::json& j, const TrainerConfig& c) {
  j = nlohmann::json{{"iters", c.iters},
                     {"group_size", c.group_size},
                     {"lr", c.lr},
                     {"kl_coeff", c.kl_coeff},
                     {"clip_range", c.clip_range},
                     {"entropy_coeff", c.entropy_coeff},
                     {"update_epochs", c.update_epochs},
                     {"n_cases", c.n_cases},
                     {"seed", c.seed},
                     {"accuracy_threshold", c.accuracy_threshold},
                     {"smoothing_window", c.smoothing_window}};
}

void from_json(const nlohmann::json& j, TrainerConfig& c) {
  static const std::set<std::string> keys = {"iters",         "group_size", "lr",   "kl_coeff",
                                             "clip_range",    "entropy_coeff", "update_epochs", "n_cases",
                                             "seed",          "accuracy_threshold", "smoothing_window"};
  if (!j.is_object()) throw Error(ErrorCode::Config, "trainer", "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) throw Error(ErrorCode::Config, "trainer." + key, "unknown key");
  }
  TrainerConfig out;
  out.iters = j.value("iters", out.iters);
  out.group_size = j.value("group_size", out.group_size);
  out.lr = j.value("lr", out.lr);
  out.kl_coeff = j.value("kl_coeff", out.kl_coeff);
  out.clip_range = j.value("clip_range", out.clip_range);
  out.entropy_coeff = j.value("entropy_coeff", out.entropy_coeff);
  out.update_epochs = j.value("update_epochs", out.update_epochs);
  out.n_cases = j.value("n_cases", out.n_cases);
  out.seed = j.value("seed", out.seed);
  out.accuracy_threshold = j.value("accuracy_threshold", out.accuracy_threshold);
  out.smoothing_window = j.value("smoothing_window", out.smoothing_window);
  out.validate();
  c = out;
}

std::vector<CaseProfile> toy_cases(std::size_t n) {
  std::vector<CaseProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    const DiagnosisLabel label = kAllLabels[i % kAllLabels.size()];
    const bool mood = label == DiagnosisLabel::Depression || label == DiagnosisLabel::Mix;
    const bool worry = label == DiagnosisLabel::Anxiety || label == DiagnosisLabel::Mix;
    char id[32];
    std::snprintf(id, sizeof id, "toy%02zu", i);
    CaseProfile p;
    p.case_id = id;
    p.label = label;
    p.explicit_cues = {{"complaint", CueField::complaint, "I have not been feeling like myself", CueStatus::present}};
    p.implicit_cues = {
        {"mood_core", CueField::symptom, mood ? "My mood has been low most days" : "My mood has been fine",
         mood ? CueStatus::present : CueStatus::absent},
        {"worry_core", CueField::symptom, worry ? "I feel anxious and worry constantly" : "I am not especially worried",
         worry ? CueStatus::present : CueStatus::absent},
        {"stressor", CueField::stressor, "Some pressure at work", CueStatus::present},
        {"duration", CueField::duration, "About 8 weeks", CueStatus::present},
        {"severity", CueField::severity, "It makes daily life harder", CueStatus::present},
        {"substance", CueField::substance, "No alcohol or drugs", CueStatus::absent},
    };
    out.push_back(std::move(p));
  }
  return out;
}

ToyState toy_state(const std::array<int, kToyFields.size()>& fields, std::size_t turn) {
  ToyState s = std::min<std::size_t>(turn / 4, 3);
  for (int f : fields) s = s * 16 + static_cast<ToyState>(f);
  return s;
}

// ---- policy -----------------------------------------------------------------------

const ToyPolicy::Logits& ToyPolicy::logits(ToyState s) { return table_.try_emplace(s, Logits{}).first->second; }

std::array<double, kToyActions> ToyPolicy::probs(ToyState s) {
  const auto& z = logits(s);
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  std::array<double, kToyActions> p{};
  double sum = 0.0;
  for (std::size_t i = 0; i < kToyActions; ++i) sum += p[i] = std::exp(z[i] - m);
  for (double& v : p) v /= sum;
  return p;
}

std::size_t ToyPolicy::sample(ToyState s, Rng& rng) {
  const auto p = probs(s);
  double u = rng.uniform();
  for (std::size_t i = 0; i < kToyActions; ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  return kToyActions - 1;
}

std::size_t ToyPolicy::greedy(ToyState s) {
  const auto& z = logits(s);
  std::size_t best = 0;
  for (std::size_t i = 1; i < kToyActions; ++i) {
    if (z[i] > z[best]) best = i;
  }
  return best;
}

void ToyPolicy::add(ToyState s, const Logits& delta) {
  auto& z = table_.try_emplace(s, Logits{}).first->second;
  for (std::size_t i = 0; i < kToyActions; ++i) {
    z[i] += delta[i];
    if (!std::isfinite(z[i])) {
      throw Error(ErrorCode::NonFiniteLogits, "state " + std::to_string(s), "action " + std::to_string(i));
    }
  }
}

// ---- episodes ---------------------------------------------------------------------

ToyEpisode run_toy_episode(ToyPolicy& policy, const CaseProfile& profile, const RewardConfig& reward,
                           std::size_t max_turns, ToyMode mode, Rng& rng) {
  PatientSimulator sim(profile, SimMode::std_mode());
  sim.opening();
  std::array<int, kToyFields.size()> fields{};
  ToyEpisode ep;
  for (std::size_t t = 0; t < max_turns; ++t) {
    const ToyState s = toy_state(fields, t);
    const std::size_t a = mode == ToyMode::Sample ? policy.sample(s, rng) : policy.greedy(s);
    ep.steps.push_back({s, a, policy.probs(s)[a]});

    std::vector<PenaltyKind> pen;
    std::size_t gained = 0;
    std::string think;
    std::string answer;
    if (a < kToyFields.size()) {
      const CueField field = kToyFields[a];
      answer = std::string(field_question(field));
      think = "The key gap is " + std::string(field_phrase(field)) +
              ". Depression and Anxiety both remain possible. Next: " + answer;
      if (fields[a] != 0) pen.push_back(PenaltyKind::loop);
      if (t + 1 == max_turns) pen.push_back(PenaltyKind::budget);
      const auto reply = sim.respond(answer);
      gained = reply.revealed.size();
      int code = 0;
      int scale = 1;
      for (const auto& fact : reply.facts) {
        if (fact.field != field) continue;
        code += scale * static_cast<int>(fact.status);
        scale *= 3;
      }
      fields[a] = 1 + std::min(code, 14);
    } else {
      const DiagnosisLabel label = kAllLabels[a - kToyFields.size()];
      answer = protocol::render_answer(Diagnose{label, {}});
      think = "Evidence on symptom and stressor reviewed. Conclusion: " + std::string(to_string(label)) + ".";
      ep.diagnosis = label;
    }
    const auto scores = mock_judge_rule(think, answer, {}, reward.s_max);
    ep.turns.push_back(make_breakdown(process_reward(scores, reward), retrieval_reward(0.0, reward),
                                      info_gain_reward(gained, reward), penalty(std::span(pen), reward)));
    if (ep.diagnosis) break;
  }
  ep.terminal = terminal_reward(ep.diagnosis, profile.label, reward);
  ep.ret = aggregate(ep.turns, ep.terminal, reward);
  return ep;
}

// ---- trainer ----------------------------------------------------------------------

TrainResult train_toy_grpo(const std::vector<CaseProfile>& cases, ToyPolicy& policy, const TrainerConfig& cfg,
                           const RewardConfig& reward, std::size_t max_turns) {
  cfg.validate();
  if (cases.empty()) throw Error(ErrorCode::Config, "trainer", "no cases");
  Rng rng(cfg.seed);
  const auto G = static_cast<std::size_t>(cfg.group_size);
  const double ref = 1.0 / static_cast<double>(kToyActions);
  TrainResult result;

  for (int it = 1; it <= cfg.iters; ++it) {
    double ret_sum = 0.0;
    std::size_t correct = 0;
    std::size_t episodes = 0;
    for (const auto& profile : cases) {
      std::vector<ToyEpisode> group;
      std::vector<double> returns;
      for (std::size_t g = 0; g < G; ++g) {
        group.push_back(run_toy_episode(policy, profile, reward, max_turns, ToyMode::Sample, rng));
        returns.push_back(group.back().ret);
        ret_sum += group.back().ret;
        correct += group.back().diagnosis == profile.label ? 1 : 0;
        ++episodes;
      }
      const auto adv = grpo_advantages(returns);

      for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
        std::unordered_map<ToyState, ToyPolicy::Logits> grads;
        for (std::size_t i = 0; i < G; ++i) {
          const double A = adv[i];
          for (const auto& step : group[i].steps) {
            const auto pi = policy.probs(step.state);
            auto& g = grads[step.state];
            const double r = pi[step.action] / step.old_prob;
            const bool clipped = (A > 0.0 && r > 1.0 + cfg.clip_range) || (A < 0.0 && r < 1.0 - cfg.clip_range);
            double kl = 0.0;
            double entropy = 0.0;
            for (double p : pi) {
              kl += p * std::log(p / ref);
              entropy -= p * std::log(p);
            }
            for (std::size_t b = 0; b < kToyActions; ++b) {
              double d = 0.0;
              if (!clipped) d += A * r * ((b == step.action ? 1.0 : 0.0) - pi[b]);
              d -= cfg.kl_coeff * pi[b] * (std::log(pi[b] / ref) - kl);
              d -= cfg.entropy_coeff * pi[b] * (std::log(pi[b]) + entropy);
              g[b] += d / static_cast<double>(G);
            }
          }
        }
        for (auto& [state, g] : grads) {
          for (double& v : g) v *= cfg.lr;
          policy.add(state, g);
        }
      }
    }
    result.curve.push_back({it, ret_sum / static_cast<double>(episodes),
                            static_cast<double>(correct) / static_cast<double>(episodes)});
  }

  const auto window = std::min<std::size_t>(static_cast<std::size_t>(cfg.smoothing_window), result.curve.size());
  double acc = 0.0;
  for (std::size_t i = result.curve.size() - window; i < result.curve.size(); ++i) acc += result.curve[i].accuracy;
  result.smoothed_accuracy = acc / static_cast<double>(window);

  Rng unused(0);
  std::size_t greedy_correct = 0;
  for (const auto& profile : cases) {
    greedy_correct += run_toy_episode(policy, profile, reward, max_turns, ToyMode::Greedy, unused).diagnosis ==
                              profile.label
                          ? 1
                          : 0;
  }
  result.greedy_accuracy = static_cast<double>(greedy_correct) / static_cast<double>(cases.size());
  result.threshold_met = result.smoothed_accuracy >= cfg.accuracy_threshold;
  return result;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "iteration,mean_return,accuracy\n";
  char line[96];
  for (const auto& p : curve) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f\n", p.iteration, p.mean_return, p.accuracy);
    out += line;
  }
  return out;
}

}  // namespace mind
