// SPDX-License-Identifier: Apache-2.0
#include "mind/http_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mind/error.hpp"
#include "mind/hash.hpp"

namespace mind {

using json = nlohmann::json;

HttplibTransport::HttplibTransport(std::string base_url, std::string api_key,
                                   std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme = base_url.find("://");
  const auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    origin_ = base_url;
  } else {
    origin_ = base_url.substr(0, path_start);
    prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

HttpResponse HttplibTransport::post(std::string_view path, const std::string& json_body) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string full = prefix_ + std::string(path);
  auto res = client.Post(full, headers, json_body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw Error(ErrorCode::Timeout, origin_ + full, httplib::to_string(err));
    }
    throw Error(ErrorCode::Transport, "0", httplib::to_string(err));
  }
  return {res->status, res->body};
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
  auto delay = base_delay;
  for (int i = 1; i < attempt && delay < max_delay; ++i) delay *= 2;
  return std::min(delay, max_delay);
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

// Runs `call` with the retry ladder. Transport errors and retryable statuses
// are retried up to `retry.max_retries` times.
template <typename Fn>
HttpResponse with_retries(const RetryPolicy& retry, const Sleeper& sleeper, std::size_t* retry_counter,
                          Fn&& call) {
  for (int attempt = 0;; ++attempt) {
    std::optional<Error> failure;
    try {
      HttpResponse resp = call();
      if (resp.status >= 200 && resp.status < 300) return resp;
      failure = Error(ErrorCode::Transport, std::to_string(resp.status), resp.body.substr(0, 200));
      if (!retryable_status(resp.status)) throw *failure;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Transport && e.code() != ErrorCode::Timeout) throw;
      if (failure && !retryable_status(std::atoi(failure->subject().c_str()))) throw;
      failure = e;
    }
    if (attempt >= retry.max_retries) throw *failure;
    if (retry_counter) ++*retry_counter;
    if (sleeper) sleeper(retry.delay_for(attempt + 1));
  }
}

std::size_t approx_tokens(std::string_view text) {
  // whitespace-delimited words; good enough for a budget counter
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace

std::string make_chat_request(std::string_view model, const std::vector<ChatTurnMsg>& messages,
                              const GenParams& params, std::string_view idempotency_key) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json body{{"model", model},
            {"messages", std::move(msgs)},
            {"temperature", params.temperature},
            {"top_p", params.top_p},
            {"max_tokens", params.max_len},
            {"idempotency_key", idempotency_key}};
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Transport, "200", std::string("malformed response: ") + e.what());
  }
  if (j.contains("completion") && j["completion"].is_string()) return j["completion"].get<std::string>();
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].contains("content")) {
      return c["message"]["content"].get<std::string>();
    }
    if (c.contains("text")) return c["text"].get<std::string>();
  }
  throw Error(ErrorCode::Transport, "200", "response carries no completion");
}

RemoteChatClient::RemoteChatClient(std::shared_ptr<HttpTransport> transport, std::string model,
                                   RetryPolicy retry, CallBudget budget, std::size_t max_in_flight,
                                   Sleeper sleeper)
    : transport_(std::move(transport)),
      model_(std::move(model)),
      retry_(retry),
      budget_(budget),
      sleeper_(std::move(sleeper)),
      in_flight_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(max_in_flight, 1, static_cast<std::size_t>(kMaxInFlightLimit)))) {}

void RemoteChatClient::charge_call() {
  std::lock_guard lock(mu_);
  if (budget_.max_calls && calls_ >= budget_.max_calls) {
    throw Error(ErrorCode::BudgetExceeded, "calls", std::to_string(calls_));
  }
  if (budget_.max_tokens && tokens_ >= budget_.max_tokens) {
    throw Error(ErrorCode::BudgetExceeded, "tokens", std::to_string(tokens_));
  }
  ++calls_;
}

std::string RemoteChatClient::chat(const std::vector<ChatTurnMsg>& messages, const GenParams& params,
                                   std::string_view idempotency_key) {
  if (messages.empty()) throw Error(ErrorCode::Config, "messages", "must be non-empty");
  charge_call();
  std::string key(idempotency_key);
  if (key.empty()) {
    std::lock_guard lock(mu_);
    key = to_hex(prompt_hash(messages)) + "-" + std::to_string(calls_);
  }
  const std::string body = make_chat_request(model_, messages, params, key);

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<kMaxInFlightLimit>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  std::size_t local_retries = 0;
  HttpResponse resp;
  try {
    resp = with_retries(retry_, sleeper_, &local_retries, [&] { return transport_->post("/v1/chat", body); });
  } catch (...) {
    std::lock_guard lock(mu_);
    retries_ += local_retries;
    throw;
  }
  std::string text = parse_chat_response(resp.body);
  std::lock_guard lock(mu_);
  retries_ += local_retries;
  tokens_ += approx_tokens(text);
  return text;
}

std::size_t RemoteChatClient::calls_made() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t RemoteChatClient::tokens_used() const {
  std::lock_guard lock(mu_);
  return tokens_;
}

std::size_t RemoteChatClient::retries_made() const {
  std::lock_guard lock(mu_);
  return retries_;
}

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model,
                               std::size_t dims, RetryPolicy retry, Sleeper sleeper)
    : transport_(std::move(transport)),
      model_(std::move(model)),
      dims_(dims),
      retry_(retry),
      sleeper_(std::move(sleeper)) {}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
  const std::string body = json{{"model", model_}, {"input", text}}.dump();
  HttpResponse resp = with_retries(retry_, sleeper_, nullptr, [&] { return transport_->post("/v1/embed", body); });
  std::vector<double> values;
  try {
    values = json::parse(resp.body).at("vector").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Transport, "200", std::string("malformed embedding: ") + e.what());
  }
  if (values.size() != dims_) {
    throw Error(ErrorCode::DimMismatch, model_, std::to_string(values.size()) + " vs " + std::to_string(dims_));
  }
  return EmbeddingVector::normalized(std::move(values));
}

std::string RemoteEmbedder::fingerprint() const { return make_fingerprint("remote:" + model_, dims_, "server"); }

ClientEnv ClientEnv::from_env() {
  ClientEnv env;
  auto get = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  env.chat_url = get("MIND_CHAT_URL");
  env.embed_url = get("MIND_EMBED_URL");
  env.api_key = get("MIND_API_KEY").value_or("");
  return env;
}

}  // namespace mind
