// SPDX-License-Identifier: Apache-2.0
//
// Remote chat/embedding backends over a chat-completions-style HTTP API.
//
//   POST /v1/chat   {model, messages:[{role,content}], temperature, top_p,
//                    max_tokens, idempotency_key}  ->  {completion}
//   POST /v1/embed  {model, input}                 ->  {vector:[d reals]}
#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mind/clients.hpp"

namespace mind {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Raises Error{Transport} on connection failure and Error{Timeout} on timeout.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(std::string_view path, const std::string& json_body) = 0;
};

/// cpp-httplib backed transport. `base_url` is `http://host[:port][/prefix]`.
class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, std::string api_key,
                   std::chrono::milliseconds timeout = std::chrono::seconds(60));
  HttpResponse post(std::string_view path, const std::string& json_body) override;

 private:
  std::string origin_;
  std::string prefix_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{200};
  std::chrono::milliseconds max_delay{5000};

  /// Delay before retry number `attempt` (1-based): min(cap, base * 2^(attempt-1)).
  std::chrono::milliseconds delay_for(int attempt) const;
};

/// Caller-configured caps; zero means unlimited.
struct CallBudget {
  std::size_t max_calls = 0;
  std::size_t max_tokens = 0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

class RemoteChatClient final : public ChatClient {
 public:
  static constexpr std::ptrdiff_t kMaxInFlightLimit = 1024;

  RemoteChatClient(std::shared_ptr<HttpTransport> transport, std::string model,
                   RetryPolicy retry = {}, CallBudget budget = {}, std::size_t max_in_flight = 8,
                   Sleeper sleeper = real_sleeper());

  std::string chat(const std::vector<ChatTurnMsg>& messages, const GenParams& params,
                   std::string_view idempotency_key = {}) override;

  std::size_t calls_made() const;
  std::size_t tokens_used() const;
  /// Retries performed over the client's lifetime.
  std::size_t retries_made() const;

 private:
  void charge_call();

  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  RetryPolicy retry_;
  CallBudget budget_;
  Sleeper sleeper_;
  std::counting_semaphore<kMaxInFlightLimit> in_flight_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
  std::size_t tokens_ = 0;
  std::size_t retries_ = 0;
};

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model, std::size_t dims,
                 RetryPolicy retry = {}, Sleeper sleeper = real_sleeper());

  EmbeddingVector embed(std::string_view text) const override;
  std::size_t dims() const noexcept override { return dims_; }
  std::string fingerprint() const override;

 private:
  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  std::size_t dims_;
  RetryPolicy retry_;
  Sleeper sleeper_;
};

/// Endpoint settings from MIND_CHAT_URL, MIND_EMBED_URL and MIND_API_KEY.
struct ClientEnv {
  std::optional<std::string> chat_url;
  std::optional<std::string> embed_url;
  std::string api_key;

  static ClientEnv from_env();
};

/// Builds the request body for POST /v1/chat.
std::string make_chat_request(std::string_view model, const std::vector<ChatTurnMsg>& messages,
                              const GenParams& params, std::string_view idempotency_key);

/// Extracts the completion text (`completion`, or `choices[0].message.content`).
std::string parse_chat_response(const std::string& body);

}  // namespace mind
