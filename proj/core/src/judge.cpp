// SPDX-License-Identifier: Apache-2.0
#include "mind/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "mind/assets.hpp"
#include "mind/error.hpp"
#include "mind/protocol.hpp"
#include "mind/types.hpp"

namespace mind {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// One entry per cue field; alternatives separated by '|'.
constexpr std::string_view kFieldMarkers[] = {"complaint", "symptom",  "duration",       "severity", "sleep",
                                              "risk",      "psychosis|mania", "stressor", "substance"};

constexpr std::string_view kEmpathyPhrases[] = {"sorry",      "that sounds", "thank you", "i understand",
                                                "must be hard", "take your time", "it makes sense"};

bool contains_any(const std::string& haystack, std::string_view alternatives) {
  std::size_t start = 0;
  while (start <= alternatives.size()) {
    auto bar = alternatives.find('|', start);
    auto alt = alternatives.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    if (!alt.empty() && haystack.find(alt) != std::string::npos) return true;
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return false;
}

int naturalness(std::string_view answer) {
  const auto text = protocol::trim(answer);
  if (text.empty()) return 0;
  int score = 1;
  const char last = text.back();
  if (last == '.' || last == '?' || last == '!') ++score;
  const auto words = tokenize_words(text);
  if (words.size() <= 60) ++score;
  bool repeated = false;
  for (std::size_t i = 1; i < words.size(); ++i) repeated = repeated || words[i] == words[i - 1];
  if (!repeated) ++score;
  if (std::isupper(static_cast<unsigned char>(text.front()))) ++score;
  return score;
}

}  // namespace

int RubricScores::get(std::string_view dim) const {
  if (dim == "sym") return sym;
  if (dim == "diff") return diff;
  if (dim == "dec") return dec;
  if (dim == "emp") return emp;
  if (dim == "nat") return nat;
  throw Error(ErrorCode::Config, std::string(dim), "unknown rubric dimension");
}

bool RubricScores::in_range() const noexcept {
  for (int v : {sym, diff, dec, emp, nat}) {
    if (v < 0 || v > s_max) return false;
  }
  return true;
}

RubricScores parse_rubric_reply(std::string_view reply, int s_max) {
  RubricScores zero;
  zero.s_max = s_max;
  RubricScores out = zero;
  const std::string text(reply);
  for (std::string_view dim : kRubricDims) {
    const std::regex re("(?:^|[^a-z])" + std::string(dim) + R"(\s*=\s*(-?[0-9]+)(?![0-9.]))");
    std::smatch m;
    if (!std::regex_search(text, m, re)) return zero;
    int v = 0;
    try {
      v = std::stoi(m[1].str());
    } catch (const std::exception&) {
      return zero;
    }
    if (v < 0 || v > s_max) return zero;
    if (dim == "sym") out.sym = v;
    if (dim == "diff") out.diff = v;
    if (dim == "dec") out.dec = v;
    if (dim == "emp") out.emp = v;
    if (dim == "nat") out.nat = v;
  }
  return out;
}

FaithfulnessScores parse_faithfulness_reply(std::string_view reply) {
  FaithfulnessScores out;
  const std::string text(reply);
  double* slots[] = {&out.fc, &out.sg, &out.pf};
  const char* names[] = {"FC", "SG", "PF"};
  for (int i = 0; i < 3; ++i) {
    const std::regex re("(?:^|[^A-Za-z])" + std::string(names[i]) + R"(\s*=\s*(-?[0-9]+(?:\.[0-9]+)?))");
    std::smatch m;
    if (!std::regex_search(text, m, re)) return {};
    double v = 0.0;
    try {
      v = std::stod(m[1].str());
    } catch (const std::exception&) {
      return {};
    }
    if (!std::isfinite(v) || v < 0.0 || v > 10.0) return {};
    *slots[i] = v;
  }
  out.avg = (out.fc + out.sg + out.pf) / 3.0;
  return out;
}

std::vector<ChatTurnMsg> rubric_prompt(std::string_view history_summary, std::string_view think,
                                       std::string_view answer, const std::vector<std::string>& supports,
                                       int s_max) {
  std::string refs;
  for (const auto& s : supports) refs += "- " + s + "\n";
  if (refs.empty()) refs = "(none)\n";
  const std::string smax = std::to_string(s_max);
  std::string user = "Summary:\n" + std::string(history_summary) + "\n\nSupports:\n" + refs + "\nReasoning:\n" +
                     std::string(think) + "\n\nResponse:\n" + std::string(answer);
  return {{Role::system, assets::fill(assets::rubric_prompt(), {{"s_max", smax}})}, {Role::user, std::move(user)}};
}

std::vector<ChatTurnMsg> faithfulness_prompt(std::string_view dialogue, const std::vector<std::string>& supports) {
  std::string refs;
  for (const auto& s : supports) refs += "- " + s + "\n";
  std::string user = "Dialogue:\n" + std::string(dialogue) + "\n\nSupports:\n" + refs;
  return {{Role::system, std::string(assets::faithfulness_prompt())}, {Role::user, std::move(user)}};
}

RubricScores score_turn(std::string_view history_summary, std::string_view think, std::string_view answer,
                        const std::vector<std::string>& supports, ChatClient& chat, int s_max) {
  if (protocol::trim(think).empty()) throw Error(ErrorCode::EmptyState, "think");
  const auto reply = chat.chat(rubric_prompt(history_summary, think, answer, supports, s_max), GenParams::patient());
  return parse_rubric_reply(reply, s_max);
}

FaithfulnessScores score_support_faithfulness(std::string_view dialogue, const std::vector<std::string>& supports,
                                              ChatClient& chat) {
  if (supports.empty()) throw Error(ErrorCode::EmptyHits, "supports");
  return parse_faithfulness_reply(chat.chat(faithfulness_prompt(dialogue, supports), GenParams::patient()));
}

std::string answer_topic(std::string_view answer) {
  if (auto action = protocol::classify_answer(answer); action && is_diagnose(*action)) {
    return lower(to_string(std::get<Diagnose>(*action).label));
  }
  std::string best;
  for (auto& tok : tokenize_words(answer)) {
    if (tok.size() > best.size()) best = std::move(tok);
  }
  return best;
}

RubricScores mock_judge_rule(std::string_view think, std::string_view answer,
                             const std::vector<std::string>& /*supports*/, int s_max) {
  RubricScores out;
  out.s_max = s_max;
  if (protocol::trim(think).empty()) return out;
  const std::string t = lower(think);

  int fields = 0;
  for (auto marker : kFieldMarkers) fields += contains_any(t, marker) ? 1 : 0;
  out.sym = std::min(s_max, fields);

  const auto padded = " " + [&] {
    std::string joined;
    for (const auto& tok : tokenize_words(think)) joined += tok + " ";
    return joined;
  }();
  for (auto label : kAllLabels) {
    if (padded.find(" " + lower(to_string(label)) + " ") != std::string::npos) out.diff = s_max;
  }

  const auto topic = answer_topic(answer);
  if (!topic.empty() && t.find(topic) != std::string::npos) out.dec = s_max;

  const std::string a = lower(answer);
  int emp = 0;
  for (auto phrase : kEmpathyPhrases) emp += a.find(phrase) != std::string::npos ? 1 : 0;
  out.emp = std::min(s_max, emp);
  out.nat = std::min(s_max, naturalness(answer));
  return out;
}

RubricScores ChatJudge::score(std::string_view history_summary, std::string_view think, std::string_view answer,
                              const std::vector<std::string>& supports) {
  if (protocol::trim(think).empty()) {
    RubricScores zero;
    zero.s_max = s_max_;
    return zero;
  }
  return score_turn(history_summary, think, answer, supports, chat_, s_max_);
}

}  // namespace mind
