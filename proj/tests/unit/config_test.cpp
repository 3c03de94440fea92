// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <optional>

#include <nlohmann/json.hpp>

#include "mind/config.hpp"
#include "mind/error.hpp"
#include "oracles.hpp"

using namespace mind;
using json = nlohmann::json;

namespace {

std::optional<ErrorCode> code_of(const json& j) {
  try {
    GlobalConfig::parse(j);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace

TEST(GlobalConfig, DefaultsMatchGolden) {
  std::ifstream in(oracle::fixture_path("default_config.json"));
  const auto golden = json::parse(in);
  EXPECT_EQ(GlobalConfig{}.to_json(), golden);
  EXPECT_EQ(GlobalConfig::parse(golden), GlobalConfig{});
  EXPECT_EQ(GlobalConfig::parse(json::object()), GlobalConfig{});
}

TEST(GlobalConfig, DefaultValues) {
  const GlobalConfig c;
  EXPECT_EQ(c.episode.max_turns, 10u);
  EXPECT_EQ(c.episode.top_k, 5);
  EXPECT_DOUBLE_EQ(c.episode.gating_threshold, 0.70);
  EXPECT_DOUBLE_EQ(c.episode.support_injection_prob, 0.33);
  EXPECT_DOUBLE_EQ(c.reward.terminal_weight, 5.0);
  EXPECT_DOUBLE_EQ(c.reward.lambda_retr, 0.01);
  EXPECT_DOUBLE_EQ(c.reward.lambda_gain, 0.005);
  EXPECT_DOUBLE_EQ(c.reward.lambda_proc, 0.01);
  EXPECT_EQ(c.rectify.max_retries, 1);
  EXPECT_EQ(c.rectify.fallback_cap, 2);
}

TEST(GlobalConfig, RoundTripIsIdempotent) {
  auto j = GlobalConfig{}.to_json();
  j["episode"]["max_turns"] = 6;
  j["prb"]["k"] = 3;
  j["episode"]["top_k"] = 3;
  j["trainer"]["lr"] = 0.1;
  j["clients"]["mock_seed"] = 9;
  const auto c = GlobalConfig::parse(j);
  EXPECT_EQ(c.episode.top_k, 3);
  EXPECT_EQ(GlobalConfig::parse(c.to_json()), c);
  EXPECT_EQ(GlobalConfig::parse(c.to_json()).to_json(), c.to_json());
}

TEST(GlobalConfig, PrbSectionPropagates) {
  const auto c = GlobalConfig::parse(json{{"prb", {{"k", 7}, {"threshold", 0.5}}}});
  EXPECT_EQ(c.episode.top_k, 7);
  EXPECT_DOUBLE_EQ(c.episode.gating_threshold, 0.5);
}

TEST(GlobalConfig, Rejections) {
  EXPECT_EQ(code_of(json{{"bogus", 1}}), ErrorCode::Config);
  EXPECT_EQ(code_of(json{{"clients", {{"chat_uri", "x"}}}}), ErrorCode::Config);
  EXPECT_EQ(code_of(json{{"prb", {{"k", 3}}}, {"episode", {{"top_k", 4}}}}), ErrorCode::Config);
  EXPECT_EQ(code_of(json{{"reward", {{"dims", json::array()}}}}), ErrorCode::EmptyDims);
  EXPECT_EQ(code_of(json{{"trainer", {{"group_size", 1}}}}), ErrorCode::Config);
  EXPECT_EQ(code_of(json{{"clients", {{"embed_dims", 0}}}}), ErrorCode::Config);
  EXPECT_EQ(code_of(json{{"episode", {{"max_turns", "ten"}}}}), ErrorCode::Config);
}

TEST(GlobalConfig, LoadErrors) {
  try {
    GlobalConfig::load("/nonexistent/mind.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
