// SPDX-License-Identifier: Apache-2.0
//
// Wire contracts for the external model roles (chat, judge-via-chat,
// embedding) and their deterministic offline stand-ins.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mind {

enum class Role { system, user, assistant };

std::string_view to_string(Role role) noexcept;

struct ChatTurnMsg {
  Role role = Role::user;
  std::string content;
};

struct GenParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_len = 2048;

  static GenParams doctor() { return {1.0, 1.0, 2048}; }
  static GenParams patient() { return {0.0, 1.0, 512}; }

  /// Error{Config} unless temperature >= 0, top_p in (0,1], max_len > 0.
  void validate() const;
  friend bool operator==(const GenParams&, const GenParams&) = default;
};

/// A unit-norm vector, or the flagged zero vector.
struct EmbeddingVector {
  std::vector<double> values;
  bool zero = false;

  std::size_t dims() const noexcept { return values.size(); }
  double norm() const noexcept;

  /// Scales to unit L2 norm; an all-zero input is flagged instead.
  static EmbeddingVector normalized(std::vector<double> raw);

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// Inner product of two normalized vectors. Error{DimMismatch | ZeroVector}.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class ChatClient {
 public:
  virtual ~ChatClient() = default;

  /// One completion. `idempotency_key` lets remote backends dedupe retries.
  virtual std::string chat(const std::vector<ChatTurnMsg>& messages, const GenParams& params,
                           std::string_view idempotency_key = {}) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::size_t dims() const noexcept = 0;
  /// Identifies (backend, dims, hash/model); stored in bank files.
  virtual std::string fingerprint() const = 0;
};

/// Stable 64-bit hash over the role/content sequence of a prompt.
std::uint64_t prompt_hash(const std::vector<ChatTurnMsg>& messages);

/// Offline chat backend. Lookup order: scripted table (by prompt hash), then
/// the rule responder, then a seeded-hash fallback reply. Pure for a fixed
/// (seed, script, responder).
class MockChat final : public ChatClient {
 public:
  using Responder = std::function<std::optional<std::string>(const std::vector<ChatTurnMsg>&)>;

  explicit MockChat(std::uint64_t seed = 0, Responder responder = {});

  void script(std::uint64_t hash, std::string reply);
  void script(const std::vector<ChatTurnMsg>& messages, std::string reply);

  std::string chat(const std::vector<ChatTurnMsg>& messages, const GenParams& params,
                   std::string_view idempotency_key = {}) override;

  std::string fallback_reply(const std::vector<ChatTurnMsg>& messages) const;

 private:
  std::uint64_t seed_;
  Responder responder_;
  std::map<std::uint64_t, std::string> table_;
};

/// Chains several rule responders; the first non-empty answer wins.
MockChat::Responder chain_responders(std::vector<MockChat::Responder> responders);

/// Token-hash embedder: lowercase, split on non-alphanumerics, FNV-1a each
/// token into `dims` buckets, count, L2-normalize.
class HashEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDefaultDims = 256;

  explicit HashEmbedder(std::size_t dims = kDefaultDims);

  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dims() const noexcept override { return dims_; }
  std::string fingerprint() const override;

  /// Bucket a single (already lowercased) token falls into.
  std::size_t bucket(std::string_view token) const noexcept;

 private:
  std::size_t dims_;
};

/// Lowercased alphanumeric tokens of `text`, in order.
std::vector<std::string> tokenize_words(std::string_view text);

/// fingerprint = hex(FNV-1a("<backend>|<dims>|<hash id>")).
std::string make_fingerprint(std::string_view backend, std::size_t dims, std::string_view hash_id);

}  // namespace mind
