// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mind/rectify.hpp"
#include "mind/rewards.hpp"
#include "mind/runner.hpp"
#include "mind/toy.hpp"

namespace mind {

struct PrbConfig {
  int k = 5;
  double threshold = 0.70;
  double alpha_sim = 0.5;
  double alpha_qual = 0.5;
  friend bool operator==(const PrbConfig&, const PrbConfig&) = default;
};

struct ClientsConfig {
  bool mock = true;
  std::uint64_t mock_seed = 0;
  std::string chat_url;   // empty: MIND_CHAT_URL
  std::string embed_url;  // empty: MIND_EMBED_URL
  std::string chat_model = "doctor";
  std::string judge_model = "judge";
  std::string embed_model = "embed";
  std::size_t embed_dims = 256;
  std::size_t max_calls = 0;
  std::size_t max_tokens = 0;
  std::size_t max_in_flight = 8;
  int timeout_ms = 60000;
  int max_retries = 3;
  friend bool operator==(const ClientsConfig&, const ClientsConfig&) = default;
};

struct PathsConfig {
  std::string bank;
  std::string cases;
  std::string output;
  std::string priors;  // empty: the shipped table
  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

/// One JSON document. Unknown keys are rejected; the prb section must agree
/// with the retrieval fields it shares with the episode and reward sections.
struct GlobalConfig {
  RewardConfig reward;
  EpisodeConfig episode;
  PrbConfig prb;
  RectifyConfig rectify;
  ClientsConfig clients;
  PathsConfig paths;
  TrainerConfig trainer;

  /// Error{Config}.
  void validate() const;
  /// Copies a changed prb section into the episode and reward sections.
  void sync_prb();

  static GlobalConfig parse(const nlohmann::json& j);
  static GlobalConfig load(const std::string& path);
  nlohmann::json to_json() const;

  friend bool operator==(const GlobalConfig&, const GlobalConfig&) = default;
};

}  // namespace mind
