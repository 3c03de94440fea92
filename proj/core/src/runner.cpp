// SPDX-License-Identifier: Apache-2.0
#include "mind/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "mind/assets.hpp"
#include "mind/error.hpp"

namespace mind {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& keys, const std::string& section) {
  if (!j.is_object()) throw Error(ErrorCode::Config, section, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) throw Error(ErrorCode::Config, section + "." + key, "unknown key");
  }
}

constexpr CueField kAskOrder[] = {CueField::symptom,  CueField::duration,        CueField::severity,
                                  CueField::sleep,    CueField::stressor,        CueField::risk,
                                  CueField::psychosis_mania, CueField::substance, CueField::complaint};

std::string recommendation_for(DiagnosisLabel label) {
  switch (label) {
    case DiagnosisLabel::Depression: return "Refer for a depression assessment and review in two weeks.";
    case DiagnosisLabel::Anxiety: return "Refer for an anxiety assessment and teach grounding techniques.";
    case DiagnosisLabel::Mix: return "Refer for a combined mood and anxiety assessment.";
    case DiagnosisLabel::Other: return "Arrange a general psychiatric evaluation.";
  }
  return {};
}

}  // namespace

// ---- config ---------------------------------------------------------------------

void to_json(json& j, const GenParams& p) {
  j = json{{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_len", p.max_len}};
}

void from_json(const json& j, GenParams& p) {
  reject_unknown(j, {"temperature", "top_p", "max_len"}, "gen");
  GenParams out = p;
  out.temperature = j.value("temperature", out.temperature);
  out.top_p = j.value("top_p", out.top_p);
  out.max_len = j.value("max_len", out.max_len);
  out.validate();
  p = out;
}

void EpisodeConfig::validate() const {
  if (max_turns < 1) throw Error(ErrorCode::Config, "episode.max_turns", "must be >= 1");
  if (top_k < 1) throw Error(ErrorCode::Config, "episode.top_k", "must be >= 1");
  if (!(support_injection_prob >= 0.0 && support_injection_prob <= 1.0)) {
    throw Error(ErrorCode::Config, "episode.support_injection_prob", "must be in [0, 1]");
  }
  if (!(gating_threshold >= -1.0 && gating_threshold <= 1.0)) {
    throw Error(ErrorCode::Config, "episode.gating_threshold", "must be in [-1, 1]");
  }
  doctor_gen.validate();
  patient_gen.validate();
}

void to_json(json& j, const EpisodeConfig& cfg) {
  j = json{{"max_turns", cfg.max_turns},
           {"top_k", cfg.top_k},
           {"support_injection_prob", cfg.support_injection_prob},
           {"gating_threshold", cfg.gating_threshold},
           {"doctor_gen", cfg.doctor_gen},
           {"patient_gen", cfg.patient_gen},
           {"seed", cfg.seed}};
}

void from_json(const json& j, EpisodeConfig& cfg) {
  reject_unknown(j,
                 {"max_turns", "top_k", "support_injection_prob", "gating_threshold", "doctor_gen", "patient_gen",
                  "seed"},
                 "episode");
  EpisodeConfig out;
  out.max_turns = j.value("max_turns", out.max_turns);
  out.top_k = j.value("top_k", out.top_k);
  out.support_injection_prob = j.value("support_injection_prob", out.support_injection_prob);
  out.gating_threshold = j.value("gating_threshold", out.gating_threshold);
  if (j.contains("doctor_gen")) j.at("doctor_gen").get_to(out.doctor_gen);
  if (j.contains("patient_gen")) j.at("patient_gen").get_to(out.patient_gen);
  out.seed = j.value("seed", out.seed);
  out.validate();
  cfg = out;
}

// ---- helpers ----------------------------------------------------------------------

std::string_view field_question(CueField field) noexcept {
  switch (field) {
    case CueField::complaint: return "What is the main problem that brings you here today?";
    case CueField::symptom: return "Which symptoms have you noticed in your mood or interest in things?";
    case CueField::duration: return "How long has this been going on?";
    case CueField::severity: return "How much does this affect your daily life?";
    case CueField::sleep: return "How has your sleep been recently?";
    case CueField::risk: return "Have you had any thoughts of self harm or suicide?";
    case CueField::psychosis_mania: return "Have you heard voices others cannot hear, or felt manic?";
    case CueField::stressor: return "Has there been any recent stress at work or in your family?";
    case CueField::substance: return "Do you drink alcohol or use any drugs?";
  }
  return "Can you tell me more?";
}

std::string transcript(const DialogueHistory& history) {
  std::string out;
  for (const auto& u : history.turns()) {
    out += u.speaker == Speaker::agent ? "Doctor: " : "Patient: ";
    out += u.text;
    out += '\n';
  }
  return out;
}

std::string history_summary(const DialogueHistory& history) {
  std::string patient_side;
  for (const auto& u : history.turns()) {
    if (u.speaker == Speaker::patient) patient_side += u.text + "\n";
  }
  return prb::compress_state(patient_side);
}

// ---- policies ---------------------------------------------------------------------

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> stage2_texts, std::vector<std::string> stage1_texts)
    : stage1_(std::move(stage1_texts)), stage2_(std::move(stage2_texts)) {
  if (stage2_.empty()) throw Error(ErrorCode::Config, "scripted policy", "no stage-2 texts");
}

std::unique_ptr<ScriptedPolicy> ScriptedPolicy::from_actions(const std::vector<Action>& actions) {
  std::vector<std::string> texts;
  for (const auto& a : actions) {
    std::string think;
    if (const auto* d = std::get_if<Diagnose>(&a)) {
      think = "Symptom and duration reviewed; Depression versus Anxiety considered; conclude " +
              std::string(to_string(d->label)) + ".";
    } else {
      think = "Symptom picture incomplete; next: " + std::get<Inquiry>(a).question;
    }
    texts.push_back(protocol::render(protocol::Stage2Output{think, a}));
  }
  return std::make_unique<ScriptedPolicy>(std::move(texts));
}

std::string ScriptedPolicy::stage1(const Stage1Request& req) {
  if (!stage1_.empty()) {
    const auto& text = stage1_[std::min(next1_, stage1_.size() - 1)];
    ++next1_;
    return text;
  }
  return protocol::render(protocol::Stage1Output{"Known and missing fields.", history_summary(req.history)});
}

std::string ScriptedPolicy::stage2(const Stage2Request&) {
  const auto& text = stage2_[std::min(next2_, stage2_.size() - 1)];
  ++next2_;
  return text;
}

RulePolicy::RulePolicy(std::size_t questions) : questions_(questions) {}

std::string RulePolicy::stage1(const Stage1Request& req) {
  return protocol::render(protocol::Stage1Output{"Summarize known and missing fields.", history_summary(req.history)});
}

std::string RulePolicy::stage2(const Stage2Request& req) {
  if (req.attempt > 0) ++skip_;
  const bool last = req.turn + 1 >= req.max_turns;
  if (req.turn >= questions_ || last) {
    const auto label = diagnose_from(req.history);
    const std::string think = "Evidence reviewed: symptom, duration, severity and sleep. Depression, Anxiety and Mix "
                              "considered against each other. Conclusion: " +
                              std::string(to_string(label)) + ".";
    return protocol::render(protocol::Stage2Output{think, Diagnose{label, recommendation_for(label)}});
  }
  const CueField field = kAskOrder[(req.turn + skip_) % std::size(kAskOrder)];
  const std::string question(field_question(field));
  std::string think = "The key gap is " + std::string(field_phrase(field)) +
                      ". Depression and Anxiety both remain possible. Next: " + question;
  if (!req.supports.empty()) think += " Support: " + req.supports.front().substr(0, 80);
  return protocol::render(protocol::Stage2Output{think, Inquiry{question}});
}

DiagnosisLabel RulePolicy::diagnose_from(const DialogueHistory& history) {
  static constexpr std::string_view kDep[] = {"low mood", "depressed", "sad", "hopeless", "interest",
                                              "enjoy",    "down",      "empty", "worthless"};
  static constexpr std::string_view kAnx[] = {"worry", "worried", "anxious", "nervous", "panic",
                                              "tense", "on edge", "restless", "fear"};
  static constexpr std::string_view kNeg[] = {"no", "not", "denies", "never", "nothing", "none", "without"};
  bool dep = false;
  bool anx = false;
  for (const auto& u : history.turns()) {
    if (u.speaker != Speaker::patient) continue;
    std::string sentence;
    auto flush = [&] {
      const std::string padded = word_padded(sentence);
      bool negated = false;
      for (auto n : kNeg) negated = negated || padded.find(" " + std::string(n) + " ") != std::string::npos;
      if (!negated) {
        for (auto k : kDep) dep = dep || padded.find(" " + std::string(k)) != std::string::npos;
        for (auto k : kAnx) anx = anx || padded.find(" " + std::string(k)) != std::string::npos;
      }
      sentence.clear();
    };
    for (char c : u.text) {
      if (c == '.' || c == '?' || c == '!' || c == ';') {
        flush();
      } else {
        sentence.push_back(c);
      }
    }
    flush();
  }
  if (dep && anx) return DiagnosisLabel::Mix;
  if (dep) return DiagnosisLabel::Depression;
  if (anx) return DiagnosisLabel::Anxiety;
  return DiagnosisLabel::Other;
}

std::string OraclePolicy::stage1(const Stage1Request& req) {
  return protocol::render(protocol::Stage1Output{std::nullopt, history_summary(req.history)});
}

std::string OraclePolicy::stage2(const Stage2Request&) {
  auto it = labels_.find(case_id_);
  const DiagnosisLabel label = it == labels_.end() ? DiagnosisLabel::Other : it->second;
  return protocol::render(protocol::Stage2Output{"Known label " + std::string(to_string(label)) + ".",
                                                 Diagnose{label, recommendation_for(label)}});
}

std::string ChatPolicy::stage1(const Stage1Request& req) {
  std::string user = "Dialogue:\n" + transcript(req.history) + "\nTurn " + std::to_string(req.turn + 1) + " of " +
                     std::to_string(req.max_turns) + ".";
  const std::string key = case_id_ + "/" + std::to_string(req.turn) + "/s1";
  return chat_.chat({{Role::system, std::string(assets::policy_stage1_prompt())}, {Role::user, std::move(user)}},
                    params_, key);
}

std::string ChatPolicy::stage2(const Stage2Request& req) {
  std::string user = "Dialogue:\n" + transcript(req.history) + "\nRetrieval state:\n" + req.rag_query + "\n";
  if (!req.supports.empty()) {
    user += "\nSupports:\n";
    for (const auto& s : req.supports) user += "- " + s + "\n";
  }
  if (!req.constraint_note.empty()) user += "\nConstraint: " + req.constraint_note + "\n";
  user += "\nTurn " + std::to_string(req.turn + 1) + " of " + std::to_string(req.max_turns) + ".";
  const std::string key = case_id_ + "/" + std::to_string(req.turn) + "/s2/" + std::to_string(req.attempt);
  return chat_.chat({{Role::system, std::string(assets::policy_stage2_prompt())}, {Role::user, std::move(user)}},
                    params_, key);
}

// ---- serialization --------------------------------------------------------------

namespace {

json action_to_json(const std::optional<Action>& action) {
  if (!action) return nullptr;
  if (const auto* d = std::get_if<Diagnose>(&*action)) {
    return json{{"type", "diagnose"}, {"label", to_string(d->label)}, {"recommendation", d->recommendation}};
  }
  return json{{"type", "inquiry"}, {"question", std::get<Inquiry>(*action).question}};
}

DiagnosisLabel label_from(const json& j) {
  const auto name = j.get<std::string>();
  auto label = parse_label(name);
  if (!label) throw Error(ErrorCode::UnknownLabel, name);
  return *label;
}

std::optional<Action> action_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  const auto type = j.at("type").get<std::string>();
  if (type == "diagnose") return Diagnose{label_from(j.at("label")), j.at("recommendation").get<std::string>()};
  if (type == "inquiry") return Inquiry{j.at("question").get<std::string>()};
  throw Error(ErrorCode::Parse, type, "unknown action type");
}

json rubric_to_json(const RubricScores& s) {
  return json{{"sym", s.sym}, {"diff", s.diff}, {"dec", s.dec}, {"emp", s.emp}, {"nat", s.nat}, {"s_max", s.s_max}};
}

RubricScores rubric_from_json(const json& j) {
  RubricScores s;
  s.sym = j.at("sym").get<int>();
  s.diff = j.at("diff").get<int>();
  s.dec = j.at("dec").get<int>();
  s.emp = j.at("emp").get<int>();
  s.nat = j.at("nat").get<int>();
  s.s_max = j.at("s_max").get<int>();
  return s;
}

json turn_to_json(const TurnRecord& r) {
  json hits = json::array();
  for (const auto& h : r.hits) hits.push_back({{"entry_id", h.entry_id}, {"similarity", h.similarity}, {"quality", h.quality}});
  json attempts = json::array();
  for (const auto& a : r.attempts) {
    json events = json::array();
    for (const auto& e : a.events) events.push_back({{"kind", to_string(e.kind)}, {"detail", e.detail}});
    attempts.push_back({{"raw", a.raw}, {"events", events}, {"decision", a.decision}});
  }
  return json{{"turn", r.turn},
              {"stage1_raw", r.stage1_raw},
              {"stage1_violations", r.stage1_violations},
              {"rag_query", r.rag_query},
              {"hits", hits},
              {"rho", r.rho},
              {"gated", r.gated},
              {"injected", r.injected},
              {"attempts", attempts},
              {"stage2_raw", r.stage2_raw},
              {"fallback_entry", r.fallback_entry ? json(*r.fallback_entry) : json(nullptr)},
              {"action", action_to_json(r.action)},
              {"rubric", rubric_to_json(r.rubric)},
              {"penalties", r.penalties},
              {"patient_utterance", r.patient_utterance},
              {"revealed", r.revealed},
              {"newly_revealed", r.newly_revealed},
              {"reward",
               {{"proc", r.reward.proc},
                {"retr", r.reward.retr},
                {"gain", r.reward.gain},
                {"pen", r.reward.pen},
                {"turn_total", r.reward.turn_total}}}};
}

TurnRecord turn_from_json(const json& j) {
  TurnRecord r;
  r.turn = j.at("turn").get<std::size_t>();
  r.stage1_raw = j.at("stage1_raw").get<std::string>();
  r.stage1_violations = j.at("stage1_violations").get<std::size_t>();
  r.rag_query = j.at("rag_query").get<std::string>();
  for (const auto& h : j.at("hits")) {
    r.hits.push_back({h.at("entry_id").get<std::string>(), h.at("similarity").get<double>(), h.at("quality").get<int>()});
  }
  r.rho = j.at("rho").get<double>();
  r.gated = j.at("gated").get<bool>();
  r.injected = j.at("injected").get<bool>();
  for (const auto& a : j.at("attempts")) {
    AttemptRecord rec;
    rec.raw = a.at("raw").get<std::string>();
    rec.decision = a.at("decision").get<std::string>();
    for (const auto& e : a.at("events")) {
      const auto name = e.at("kind").get<std::string>();
      auto kind = parse_utility_kind(name);
      if (!kind) throw Error(ErrorCode::Parse, name, "unknown utility event");
      rec.events.push_back({*kind, e.at("detail").get<std::string>()});
    }
    r.attempts.push_back(std::move(rec));
  }
  r.stage2_raw = j.at("stage2_raw").get<std::string>();
  if (!j.at("fallback_entry").is_null()) r.fallback_entry = j.at("fallback_entry").get<std::string>();
  r.action = action_from_json(j.at("action"));
  r.rubric = rubric_from_json(j.at("rubric"));
  r.penalties = j.at("penalties").get<std::vector<std::string>>();
  r.patient_utterance = j.at("patient_utterance").get<std::string>();
  r.revealed = j.at("revealed").get<std::vector<std::string>>();
  r.newly_revealed = j.at("newly_revealed").get<std::size_t>();
  const auto& w = j.at("reward");
  r.reward = {w.at("proc").get<double>(), w.at("retr").get<double>(), w.at("gain").get<double>(),
              w.at("pen").get<double>(), w.at("turn_total").get<double>()};
  return r;
}

}  // namespace

void to_json(json& j, const Trajectory& t) {
  json turns = json::array();
  for (const auto& r : t.turns) turns.push_back(turn_to_json(r));
  j = json{{"schema", kTrajectorySchema},
           {"case_id", t.case_id},
           {"label", to_string(t.label)},
           {"seed", t.seed},
           {"sim_mode", t.sim_mode},
           {"turns", turns},
           {"final_diagnosis", t.final_diagnosis ? json(to_string(*t.final_diagnosis)) : json(nullptr)},
           {"terminal", t.terminal},
           {"episode_return", t.episode_return},
           {"complete", t.complete},
           {"error", t.error}};
}

void from_json(const json& j, Trajectory& t) {
  const auto schema = j.value("schema", std::string{});
  if (schema != kTrajectorySchema) throw Error(ErrorCode::SchemaVersionMismatch, schema, "trajectory");
  Trajectory out;
  out.case_id = j.at("case_id").get<std::string>();
  out.label = label_from(j.at("label"));
  out.seed = j.at("seed").get<std::uint64_t>();
  out.sim_mode = j.value("sim_mode", std::string("std"));
  for (const auto& r : j.at("turns")) out.turns.push_back(turn_from_json(r));
  if (!j.at("final_diagnosis").is_null()) out.final_diagnosis = label_from(j.at("final_diagnosis"));
  out.terminal = j.at("terminal").get<double>();
  out.episode_return = j.at("episode_return").get<double>();
  out.complete = j.value("complete", true);
  out.error = j.value("error", std::string{});
  t = std::move(out);
}

std::string to_jsonl_line(const Trajectory& t) { return json(t).dump(); }

std::vector<Trajectory> read_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open trajectories");
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<Trajectory>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no), e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(line_no), e.what());
    }
  }
  return out;
}

double recompute_return(const Trajectory& t, const RewardConfig& cfg) {
  constexpr double kTol = 1e-9;
  auto check = [&](double logged, double recomputed, const std::string& what) {
    const double delta = std::abs(logged - recomputed);
    if (!(delta <= kTol)) {
      throw Error(ErrorCode::Mismatch, t.case_id + ":" + what,
                  "logged " + std::to_string(logged) + " recomputed " + std::to_string(recomputed));
    }
  };
  std::vector<RewardBreakdown> parts;
  for (const auto& r : t.turns) {
    const auto b = make_breakdown(process_reward(r.rubric, cfg), retrieval_reward(r.rho, cfg),
                                  info_gain_reward(r.newly_revealed, cfg), penalty(std::span(r.penalties), cfg));
    const std::string at = "turn " + std::to_string(r.turn);
    check(r.reward.proc, b.proc, at + " proc");
    check(r.reward.retr, b.retr, at + " retr");
    check(r.reward.gain, b.gain, at + " gain");
    check(r.reward.pen, b.pen, at + " pen");
    check(r.reward.turn_total, b.turn_total, at + " turn_total");
    parts.push_back(b);
  }
  const double terminal = terminal_reward(t.final_diagnosis, t.label, cfg);
  check(t.terminal, terminal, "terminal");
  const double R = aggregate(parts, terminal, cfg);
  check(t.episode_return, R, "episode_return");
  return R;
}

// ---- episodes ---------------------------------------------------------------------

Trajectory run_episode(Policy& policy, PatientSimulator& sim, const CaseProfile& profile, TurnJudge& judge,
                       const Environment& env) {
  if (!env.embed) throw Error(ErrorCode::Config, "environment", "no embedder");
  const auto& ep = env.episode;
  const auto L = static_cast<std::size_t>(ep.max_turns);
  const auto universe = profile.cue_ids();

  Trajectory traj;
  traj.case_id = profile.case_id;
  traj.label = profile.label;
  traj.seed = ep.seed;
  traj.sim_mode = sim.mode().kind == SimMode::Kind::Adapt ? "adapt" : "std";

  Rng coin(derive_seed(ep.seed, profile.case_id + "#inject"));
  const auto opening = sim.opening();
  DialogueHistory history = reveal(DialogueHistory{}, opening.revealed, universe).history.with_patient(opening.utterance);
  policy.begin_episode({profile.case_id, ep.seed, opening.utterance});

  Rectifier rectifier(env.rectify);
  const DetectContext ctx{*env.embed, *env.router, env.rectify, L};
  std::vector<std::size_t> gains;

  try {
    for (std::size_t t = 0; t < L; ++t) {
      TurnRecord rec;
      rec.turn = t;
      rec.stage1_raw = policy.stage1({history, t, L});
      const auto p1 = protocol::parse_stage1(rec.stage1_raw);
      rec.stage1_violations = p1.violations.size();
      rec.rag_query = p1.value && !protocol::trim(p1.value->rag_query).empty() ? p1.value->rag_query
                                                                             : history_summary(history);

      const auto qvec = env.embed->embed(rec.rag_query);
      std::vector<prb::RetrievalHit> hits;
      if (env.index && !env.index->empty() && !qvec.zero) {
        try {
          hits = prb::retrieve(*env.index, qvec, static_cast<std::size_t>(ep.top_k));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::EmptyIndex) throw;
        }
      }
      for (const auto& h : hits) rec.hits.push_back({h.entry_id, h.similarity, h.quality});
      rec.rho = hits.empty() ? 0.0 : prb::reliability_proxy(hits, env.reward.alpha_sim, env.reward.alpha_qual);
      const auto g = prb::gate(hits, ep.gating_threshold);
      rec.gated = g.inject;
      const double u = coin.uniform();
      rec.injected = g.inject && u < ep.support_injection_prob;
      const std::vector<std::string> supports = rec.injected ? g.supports : std::vector<std::string>{};

      rectifier.begin_turn();
      std::optional<protocol::Stage2Output> accepted;
      std::vector<UtilityEvent> final_events;
      std::string note;
      int attempt = 0;
      const std::optional<EmbeddingVector> q_t = qvec.zero ? std::nullopt : std::optional(qvec);
      while (true) {
        Stage2Request req{history, t, L, rec.rag_query, supports, note, attempt};
        std::string raw = policy.stage2(req);
        auto p2 = protocol::parse_stage2(raw);
        auto events = detect(p2, history, gains, ctx);
        auto decision = rectifier.step(events, env.index, q_t);
        rec.attempts.push_back({raw, events, describe(decision)});
        if (const auto* r = std::get_if<Retry>(&decision)) {
          note = r->constraint_note;
          attempt = r->attempt;
          continue;
        }
        if (const auto* f = std::get_if<Fallback>(&decision)) {
          rec.fallback_entry = f->entry_id;
          rec.action = Inquiry{f->ref_inquiry};
          break;
        }
        rec.stage2_raw = std::move(raw);
        final_events = std::move(events);
        if (p2.value) {
          accepted = std::move(*p2.value);
          rec.action = accepted->action;
        }
        break;
      }

      if (!rec.fallback_entry) {
        for (const auto& e : final_events) rec.penalties.emplace_back(to_string(penalty_for(e.kind)));
        if (!p1.clean()) rec.penalties.emplace_back(to_string(PenaltyKind::format));
      }

      const std::string think = accepted ? accepted->think : std::string{};
      std::string answer;
      if (rec.action) {
        answer = is_diagnose(*rec.action) ? protocol::render_answer(*rec.action)
                                          : std::get<Inquiry>(*rec.action).question;
      }
      rec.rubric = judge.score(history_summary(history), think, answer, supports);

      if (rec.action && !is_diagnose(*rec.action)) {
        const auto& question = std::get<Inquiry>(*rec.action).question;
        auto reply = sim.respond(question);
        auto rr = reveal(history.with_agent(question), reply.revealed, universe);
        history = rr.history.with_patient(reply.utterance);
        rec.patient_utterance = reply.utterance;
        rec.revealed.assign(reply.revealed.begin(), reply.revealed.end());
        rec.newly_revealed = rr.newly_revealed;
      } else if (rec.action) {
        history = history.with_agent(answer);
        traj.final_diagnosis = std::get<Diagnose>(*rec.action).label;
      } else {
        history = history.with_agent(rec.stage2_raw);
      }
      gains.push_back(rec.newly_revealed);

      rec.reward = make_breakdown(process_reward(rec.rubric, env.reward), retrieval_reward(rec.rho, env.reward),
                                  info_gain_reward(rec.newly_revealed, env.reward),
                                  penalty(std::span<const std::string>(rec.penalties), env.reward));
      const bool done = rec.action && is_diagnose(*rec.action);
      traj.turns.push_back(std::move(rec));
      if (done) break;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Transport && e.code() != ErrorCode::Timeout && e.code() != ErrorCode::BudgetExceeded) {
      throw;
    }
    traj.complete = false;
    traj.error = e.what();
  }

  std::vector<RewardBreakdown> parts;
  for (const auto& r : traj.turns) parts.push_back(r.reward);
  traj.terminal = terminal_reward(traj.final_diagnosis, traj.label, env.reward);
  traj.episode_return = aggregate(parts, traj.terminal, env.reward);
  return traj;
}

Trajectory run_case(Policy& policy, const CaseProfile& profile, const Environment& env) {
  PatientSimulator sim(profile, SimMode{env.sim, env.episode.seed}, *env.priors, *env.router);
  std::unique_ptr<TurnJudge> judge = env.make_judge ? env.make_judge() : std::make_unique<MockJudge>(env.reward.s_max);
  return run_episode(policy, sim, profile, *judge, env);
}

std::vector<Trajectory> run_batch(const std::vector<CaseProfile>& cases, const PolicyFactory& make_policy,
                                  const Environment& env, std::size_t workers) {
  std::vector<std::optional<Trajectory>> results(cases.size());
  std::vector<std::exception_ptr> errors(cases.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        auto policy = make_policy();
        results[i] = run_case(*policy, cases[i], env);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(cases.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Trajectory> out;
  out.reserve(cases.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

}  // namespace mind
