// SPDX-License-Identifier: Apache-2.0
#include "mind/clients.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mind/error.hpp"
#include "mind/hash.hpp"

namespace mind {

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

void GenParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::Config, "temperature", "must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::Config, "top_p", "must be in (0,1]");
  if (max_len <= 0) throw Error(ErrorCode::Config, "max_len", "must be positive");
}

double EmbeddingVector::norm() const noexcept {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::normalized(std::vector<double> raw) {
  double s = 0.0;
  for (double v : raw) s += v * v;
  EmbeddingVector out;
  if (s == 0.0) {
    out.values = std::move(raw);
    out.zero = true;
    return out;
  }
  const double inv = 1.0 / std::sqrt(s);
  for (double& v : raw) v *= inv;
  out.values = std::move(raw);
  return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorCode::DimMismatch, {}, std::to_string(a.dims()) + " vs " + std::to_string(b.dims()));
  }
  if (a.zero || b.zero) throw Error(ErrorCode::ZeroVector);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot, -1.0, 1.0);
}

std::uint64_t prompt_hash(const std::vector<ChatTurnMsg>& messages) {
  std::uint64_t h = kFnvOffset;
  for (const auto& m : messages) {
    h = fnv1a64(to_string(m.role), h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(m.content, h);
    h = fnv1a64(std::string_view("\x1e", 1), h);
  }
  return h;
}

MockChat::MockChat(std::uint64_t seed, Responder responder)
    : seed_(seed), responder_(std::move(responder)) {}

void MockChat::script(std::uint64_t hash, std::string reply) { table_[hash] = std::move(reply); }

void MockChat::script(const std::vector<ChatTurnMsg>& messages, std::string reply) {
  script(prompt_hash(messages), std::move(reply));
}

std::string MockChat::fallback_reply(const std::vector<ChatTurnMsg>& messages) const {
  return "mock-reply-" + to_hex(mix64(prompt_hash(messages) ^ mix64(seed_)));
}

std::string MockChat::chat(const std::vector<ChatTurnMsg>& messages, const GenParams&,
                           std::string_view) {
  if (messages.empty()) throw Error(ErrorCode::Config, "messages", "must be non-empty");
  if (auto it = table_.find(prompt_hash(messages)); it != table_.end()) return it->second;
  if (responder_) {
    if (auto reply = responder_(messages)) return *reply;
  }
  return fallback_reply(messages);
}

MockChat::Responder chain_responders(std::vector<MockChat::Responder> responders) {
  return [rs = std::move(responders)](const std::vector<ChatTurnMsg>& messages) -> std::optional<std::string> {
    for (const auto& r : rs) {
      if (!r) continue;
      if (auto reply = r(messages)) return reply;
    }
    return std::nullopt;
  };
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string make_fingerprint(std::string_view backend, std::size_t dims, std::string_view hash_id) {
  std::string key(backend);
  key += "|" + std::to_string(dims) + "|";
  key += hash_id;
  return to_hex(fnv1a64(key));
}

HashEmbedder::HashEmbedder(std::size_t dims) : dims_(dims) {
  if (dims_ == 0) throw Error(ErrorCode::Config, "dims", "must be positive");
}

std::size_t HashEmbedder::bucket(std::string_view token) const noexcept {
  return static_cast<std::size_t>(fnv1a64(token) % dims_);
}

EmbeddingVector HashEmbedder::embed(std::string_view text) const {
  std::vector<double> counts(dims_, 0.0);
  for (const auto& tok : tokenize_words(text)) counts[bucket(tok)] += 1.0;
  return EmbeddingVector::normalized(std::move(counts));
}

std::string HashEmbedder::fingerprint() const { return make_fingerprint("hash-embed", dims_, "fnv1a64"); }

}  // namespace mind
