// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/types.hpp"
#include "oracles.hpp"

using namespace mind;

namespace {

CueItem cue(std::string id, CueField f, std::string v = "x") { return {std::move(id), f, std::move(v), CueStatus::present}; }

CaseProfile profile_3_5() {
  CaseProfile p;
  p.case_id = "p";
  for (int i = 0; i < 3; ++i) p.explicit_cues.push_back(cue("e" + std::to_string(i), CueField::complaint));
  for (int i = 0; i < 5; ++i) p.implicit_cues.push_back(cue("i" + std::to_string(i), CueField::symptom));
  p.label = DiagnosisLabel::Mix;
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::Parse;
}

}  // namespace

TEST(ValidateProfile, AcceptsDisjointIds) {
  const auto p = profile_3_5();
  EXPECT_EQ(validate_profile(p), p);
}

TEST(ValidateProfile, DuplicateIdNamesTheCue) {
  auto p = profile_3_5();
  p.implicit_cues[2].id = "e1";
  try {
    validate_profile(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateCueId);
    EXPECT_EQ(e.subject(), "e1");
  }
}

TEST(ValidateProfile, EmptyExplicitCues) {
  auto p = profile_3_5();
  p.explicit_cues.clear();
  EXPECT_EQ(code_of([&] { validate_profile(p); }), ErrorCode::EmptyExplicitCues);
}

TEST(CaseJson, UnknownFieldIsRejected) {
  const auto j = nlohmann::json::parse(R"({"id":"c","field":"appetite","value":"v"})");
  EXPECT_EQ(code_of([&] { (void)j.get<CueItem>(); }), ErrorCode::UnknownField);
}

TEST(CaseJson, RoundTripsThroughFixtureFile) {
  const auto cases = load_cases(oracle::fixture_path("cases.jsonl"));
  ASSERT_EQ(cases.size(), 8u);
  for (const auto& c : cases) EXPECT_EQ(nlohmann::json(c).get<CaseProfile>(), c);
}

TEST(Reveal, CountsOnlyNewIds) {
  const std::set<std::string> universe = {"c1", "c2", "c3"};
  auto r1 = reveal(DialogueHistory{}, {"c1", "c2"}, universe);
  EXPECT_EQ(r1.newly_revealed, 2u);
  EXPECT_EQ(reveal(reveal(DialogueHistory{}, {"c1"}, universe).history, {"c1"}, universe).newly_revealed, 0u);
  EXPECT_EQ(reveal(r1.history, {"c1", "c3"}, universe).newly_revealed, 1u);
}

TEST(Reveal, UnknownCueId) {
  EXPECT_EQ(code_of([] { reveal(DialogueHistory{}, {"zz"}, {"c1"}); }), ErrorCode::UnknownCueId);
}

TEST(Reveal, ConservationOnRandomSequences) {
  std::mt19937_64 g(11);
  std::set<std::string> universe;
  for (int i = 0; i < 12; ++i) universe.insert("c" + std::to_string(i));
  const std::vector<std::string> ids(universe.begin(), universe.end());
  for (int trial = 0; trial < 200; ++trial) {
    DialogueHistory h;
    std::size_t sum = 0;
    std::set<std::string> expected;
    for (int step = 0; step < 8; ++step) {
      std::set<std::string> batch;
      for (const auto& id : ids) {
        if (g() % 4 == 0) batch.insert(id);
      }
      std::size_t fresh = 0;
      for (const auto& id : batch) fresh += expected.insert(id).second ? 1 : 0;
      const auto r = reveal(h, batch, universe);
      EXPECT_EQ(r.newly_revealed, fresh);
      sum += r.newly_revealed;
      h = r.history;
      // Idempotence.
      EXPECT_EQ(reveal(h, batch, universe).newly_revealed, 0u);
    }
    EXPECT_EQ(sum, h.revealed_cue_ids().size());
    EXPECT_EQ(h.revealed_cue_ids(), expected);
  }
}

TEST(DialogueHistory, PatientUtteranceKeepsTurnIndex) {
  DialogueHistory h;
  h = h.with_agent("q1");
  EXPECT_EQ(h.turn_index(), 1u);
  h = h.with_patient("a1");
  EXPECT_EQ(h.turn_index(), 1u);
  h = h.with_agent("q2").with_patient("a2");
  EXPECT_EQ(h.turn_index(), 2u);
  EXPECT_EQ(h.agent_utterances(), (std::vector<std::string>{"q1", "q2"}));
}

TEST(Labels, ExactCaseSensitiveNames) {
  for (auto l : kAllLabels) EXPECT_EQ(parse_label(to_string(l)), l);
  EXPECT_FALSE(parse_label("depression"));
  EXPECT_FALSE(parse_label("NoDecision"));
}
