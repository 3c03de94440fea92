// SPDX-License-Identifier: Apache-2.0
#include "mind/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/error.hpp"

namespace mind {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& keys, const std::string& section) {
  if (!j.is_object()) throw Error(ErrorCode::Config, section, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!keys.count(key)) throw Error(ErrorCode::Config, section.empty() ? key : section + "." + key, "unknown key");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, key, e.what());
  }
}

}  // namespace

void GlobalConfig::validate() const {
  reward.validate();
  episode.validate();
  rectify.validate();
  trainer.validate();
  if (prb.k != episode.top_k || prb.threshold != episode.gating_threshold || prb.alpha_sim != reward.alpha_sim ||
      prb.alpha_qual != reward.alpha_qual) {
    throw Error(ErrorCode::Config, "prb", "k/threshold/alpha_sim/alpha_qual disagree with episode or reward");
  }
  if (clients.embed_dims == 0) throw Error(ErrorCode::Config, "clients.embed_dims", "must be > 0");
  if (clients.max_in_flight == 0) throw Error(ErrorCode::Config, "clients.max_in_flight", "must be > 0");
  if (clients.timeout_ms <= 0) throw Error(ErrorCode::Config, "clients.timeout_ms", "must be > 0");
  if (clients.max_retries < 0) throw Error(ErrorCode::Config, "clients.max_retries", "must be >= 0");
}

void GlobalConfig::sync_prb() {
  episode.top_k = prb.k;
  episode.gating_threshold = prb.threshold;
  reward.alpha_sim = prb.alpha_sim;
  reward.alpha_qual = prb.alpha_qual;
}

GlobalConfig GlobalConfig::parse(const json& j) {
  reject_unknown(j, {"reward", "episode", "prb", "rectify", "clients", "paths", "trainer"}, "");
  GlobalConfig cfg;
  try {
    if (j.contains("reward")) j.at("reward").get_to(cfg.reward);
    if (j.contains("episode")) j.at("episode").get_to(cfg.episode);
    if (j.contains("rectify")) j.at("rectify").get_to(cfg.rectify);
    if (j.contains("trainer")) j.at("trainer").get_to(cfg.trainer);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "config", e.what());
  }
  if (j.contains("prb")) {
    const auto& p = j.at("prb");
    reject_unknown(p, {"k", "threshold", "alpha_sim", "alpha_qual"}, "prb");
    cfg.prb = {cfg.episode.top_k, cfg.episode.gating_threshold, cfg.reward.alpha_sim, cfg.reward.alpha_qual};
    read(p, "k", cfg.prb.k);
    read(p, "threshold", cfg.prb.threshold);
    read(p, "alpha_sim", cfg.prb.alpha_sim);
    read(p, "alpha_qual", cfg.prb.alpha_qual);
  } else {
    cfg.prb = {cfg.episode.top_k, cfg.episode.gating_threshold, cfg.reward.alpha_sim, cfg.reward.alpha_qual};
  }
  if (j.contains("clients")) {
    const auto& c = j.at("clients");
    reject_unknown(c,
                   {"mock", "mock_seed", "chat_url", "embed_url", "chat_model", "judge_model", "embed_model",
                    "embed_dims", "max_calls", "max_tokens", "max_in_flight", "timeout_ms", "max_retries"},
                   "clients");
    read(c, "mock", cfg.clients.mock);
    read(c, "mock_seed", cfg.clients.mock_seed);
    read(c, "chat_url", cfg.clients.chat_url);
    read(c, "embed_url", cfg.clients.embed_url);
    read(c, "chat_model", cfg.clients.chat_model);
    read(c, "judge_model", cfg.clients.judge_model);
    read(c, "embed_model", cfg.clients.embed_model);
    read(c, "embed_dims", cfg.clients.embed_dims);
    read(c, "max_calls", cfg.clients.max_calls);
    read(c, "max_tokens", cfg.clients.max_tokens);
    read(c, "max_in_flight", cfg.clients.max_in_flight);
    read(c, "timeout_ms", cfg.clients.timeout_ms);
    read(c, "max_retries", cfg.clients.max_retries);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    reject_unknown(p, {"bank", "cases", "output", "priors"}, "paths");
    read(p, "bank", cfg.paths.bank);
    read(p, "cases", cfg.paths.cases);
    read(p, "output", cfg.paths.output);
    read(p, "priors", cfg.paths.priors);
  }
  auto explicit_in = [&](const char* section, const char* key) {
    return j.contains(section) && j.at(section).contains(key);
  };
  if ((explicit_in("episode", "top_k") && cfg.episode.top_k != cfg.prb.k) ||
      (explicit_in("episode", "gating_threshold") && cfg.episode.gating_threshold != cfg.prb.threshold) ||
      (explicit_in("reward", "alpha_sim") && cfg.reward.alpha_sim != cfg.prb.alpha_sim) ||
      (explicit_in("reward", "alpha_qual") && cfg.reward.alpha_qual != cfg.prb.alpha_qual)) {
    throw Error(ErrorCode::Config, "prb", "conflicts with an explicit episode or reward value");
  }
  cfg.sync_prb();
  cfg.validate();
  return cfg;
}

GlobalConfig GlobalConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, path, e.what());
  }
  return parse(j);
}

json GlobalConfig::to_json() const {
  return json{{"reward", reward},
              {"episode", episode},
              {"prb", {{"k", prb.k}, {"threshold", prb.threshold}, {"alpha_sim", prb.alpha_sim},
                       {"alpha_qual", prb.alpha_qual}}},
              {"rectify", rectify},
              {"clients",
               {{"mock", clients.mock},
                {"mock_seed", clients.mock_seed},
                {"chat_url", clients.chat_url},
                {"embed_url", clients.embed_url},
                {"chat_model", clients.chat_model},
                {"judge_model", clients.judge_model},
                {"embed_model", clients.embed_model},
                {"embed_dims", clients.embed_dims},
                {"max_calls", clients.max_calls},
                {"max_tokens", clients.max_tokens},
                {"max_in_flight", clients.max_in_flight},
                {"timeout_ms", clients.timeout_ms},
                {"max_retries", clients.max_retries}}},
              {"paths", {{"bank", paths.bank}, {"cases", paths.cases}, {"output", paths.output},
                         {"priors", paths.priors}}},
              {"trainer", trainer}};
}

}  // namespace mind
