// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <deque>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "mind/clients.hpp"
#include "mind/error.hpp"
#include "mind/http_client.hpp"
#include "oracles.hpp"

using namespace mind;

namespace {

const std::vector<ChatTurnMsg> kPrompt = {{Role::system, "s"}, {Role::user, "hello"}};

// Reference FNV-1a 64 over the token bytes.
std::size_t ref_bucket(const std::string& tok, std::size_t dims) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tok) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h % dims);
}

/// Replays a scripted status sequence and records committed completions per
/// idempotency key.
class FakeTransport final : public HttpTransport {
 public:
  explicit FakeTransport(std::deque<int> statuses) : statuses_(std::move(statuses)) {}

  HttpResponse post(std::string_view, const std::string& body) override {
    ++posts;
    const int status = statuses_.empty() ? 200 : statuses_.front();
    if (!statuses_.empty()) statuses_.pop_front();
    if (status == 0) throw Error(ErrorCode::Timeout, "fake");
    if (status != 200) return {status, "err"};
    const auto j = nlohmann::json::parse(body);
    const auto key = j.at("idempotency_key").get<std::string>();
    auto [it, fresh] = committed.emplace(key, "reply-" + std::to_string(committed.size()));
    if (!fresh) ++dedupes;
    return {200, nlohmann::json{{"completion", it->second}}.dump()};
  }

  int posts = 0;
  int dedupes = 0;
  std::map<std::string, std::string> committed;

 private:
  std::deque<int> statuses_;
};

RetryPolicy fast(int n) {
  RetryPolicy r;
  r.max_retries = n;
  return r;
}

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

}  // namespace

TEST(MockChat, ScriptedLookup) {
  MockChat chat(1);
  chat.script(kPrompt, "r1");
  EXPECT_EQ(chat.chat(kPrompt, GenParams::doctor()), "r1");
  chat.script(prompt_hash({{Role::user, "x"}}), "r2");
  EXPECT_EQ(chat.chat({{Role::user, "x"}}, GenParams::doctor()), "r2");
}

TEST(MockChat, FallbackIsSeededAndStable) {
  MockChat a(7);
  MockChat b(7);
  MockChat c(8);
  EXPECT_EQ(a.chat(kPrompt, {}), b.chat(kPrompt, {}));
  EXPECT_NE(a.chat(kPrompt, {}), c.chat(kPrompt, {}));
  EXPECT_EQ(a.chat(kPrompt, {}).rfind("mock-reply-", 0), 0u);
}

TEST(MockChat, ResponderBeforeFallback) {
  MockChat chat(0, chain_responders({[](const auto&) -> std::optional<std::string> { return std::nullopt; },
                                     [](const auto&) -> std::optional<std::string> { return "rule"; }}));
  EXPECT_EQ(chat.chat(kPrompt, {}), "rule");
  chat.script(kPrompt, "scripted");
  EXPECT_EQ(chat.chat(kPrompt, {}), "scripted");
}

TEST(HashEmbedder, DeterministicUnitVectors) {
  HashEmbedder e;
  const auto a = e.embed("Low mood, poor sleep for 12 weeks");
  EXPECT_EQ(a, e.embed("Low mood, poor sleep for 12 weeks"));
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-9);
  EXPECT_NEAR(a.norm(), 1.0, 1e-12);
}

TEST(HashEmbedder, EmptyTextIsFlaggedZero) {
  const auto z = HashEmbedder().embed("  ,;  ");
  EXPECT_TRUE(z.zero);
  EXPECT_EQ(z.dims(), 256u);
}

TEST(HashEmbedder, DisjointBucketsGiveZeroCosine) {
  HashEmbedder e;
  // Pick two tokens whose reference buckets differ.
  const std::string a = "anxiety";
  std::string b;
  for (const char* cand : {"sleep", "weeks", "alcohol", "family", "voices"}) {
    if (ref_bucket(cand, 256) != ref_bucket(a, 256)) {
      b = cand;
      break;
    }
  }
  ASSERT_FALSE(b.empty());
  EXPECT_EQ(e.bucket(a), ref_bucket(a, 256));
  EXPECT_EQ(e.bucket(b), ref_bucket(b, 256));
  EXPECT_DOUBLE_EQ(cosine(e.embed(a), e.embed(b)), 0.0);
}

TEST(HashEmbedder, FingerprintTracksDims) {
  EXPECT_EQ(HashEmbedder(256).fingerprint(), HashEmbedder(256).fingerprint());
  EXPECT_NE(HashEmbedder(256).fingerprint(), HashEmbedder(128).fingerprint());
}

TEST(Cosine, HandInnerProduct) {
  std::vector<double> v1(8, 0.0);
  std::vector<double> v2(8, 0.0);
  v1[0] = 0.6;
  v1[1] = 0.8;
  v2[0] = 1.0;
  EXPECT_NEAR(cosine(EmbeddingVector::normalized(v1), EmbeddingVector::normalized(v2)), 0.6, 1e-12);
  std::vector<double> v3(8, 0.0);
  v3[2] = 1.0;
  EXPECT_DOUBLE_EQ(cosine(EmbeddingVector::normalized(v2), EmbeddingVector::normalized(v3)), 0.0);
}

TEST(Cosine, Errors) {
  const auto a = EmbeddingVector::normalized({1.0, 0.0});
  const auto b = EmbeddingVector::normalized({1.0, 0.0, 0.0});
  const auto z = EmbeddingVector::normalized({0.0, 0.0});
  EXPECT_THROW(cosine(a, b), Error);
  try {
    cosine(a, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVector);
  }
}

TEST(Cosine, SymmetricAndBoundedOnRandomVectors) {
  std::mt19937_64 g(2);
  for (int i = 0; i < 500; ++i) {
    const auto a = EmbeddingVector::normalized(oracle::random_unit(g, 16));
    const auto b = EmbeddingVector::normalized(oracle::random_unit(g, 16));
    EXPECT_EQ(cosine(a, b), cosine(b, a));
    EXPECT_LE(std::abs(cosine(a, b)), 1.0 + 1e-9);
  }
}

TEST(RemoteChat, RetriesTransientFailures) {
  auto t = std::make_shared<FakeTransport>(std::deque<int>{500, 500, 200});
  RemoteChatClient client(t, "m", fast(3), {}, 4, kNoSleep);
  EXPECT_EQ(client.chat(kPrompt, {}, "k1"), "reply-0");
  EXPECT_EQ(t->posts, 3);
  EXPECT_EQ(client.retries_made(), 2u);
}

TEST(RemoteChat, GivesUpAtTheCap) {
  auto t = std::make_shared<FakeTransport>(std::deque<int>{503, 0, 503});
  RemoteChatClient client(t, "m", fast(2), {}, 4, kNoSleep);
  try {
    client.chat(kPrompt, {}, "k");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Transport);
  }
  EXPECT_EQ(t->posts, 3);
}

TEST(RemoteChat, ClientErrorsAreNotRetried) {
  auto t = std::make_shared<FakeTransport>(std::deque<int>{400});
  RemoteChatClient client(t, "m", fast(3), {}, 4, kNoSleep);
  EXPECT_THROW(client.chat(kPrompt, {}, "k"), Error);
  EXPECT_EQ(t->posts, 1);
}

TEST(RemoteChat, OneCommitPerIdempotencyKey) {
  auto t = std::make_shared<FakeTransport>(std::deque<int>{200, 500, 200});
  RemoteChatClient client(t, "m", fast(3), {}, 4, kNoSleep);
  const auto first = client.chat(kPrompt, {}, "same");
  const auto second = client.chat(kPrompt, {}, "same");
  EXPECT_EQ(first, second);
  EXPECT_EQ(t->committed.size(), 1u);
}

TEST(RemoteChat, CallBudget) {
  auto t = std::make_shared<FakeTransport>(std::deque<int>{});
  RemoteChatClient client(t, "m", fast(0), CallBudget{2, 0}, 4, kNoSleep);
  client.chat(kPrompt, {}, "a");
  client.chat(kPrompt, {}, "b");
  try {
    client.chat(kPrompt, {}, "c");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
  }
}

TEST(RetryPolicy, ExponentialWithCap) {
  RetryPolicy r;
  EXPECT_EQ(r.delay_for(1).count(), 200);
  EXPECT_EQ(r.delay_for(2).count(), 400);
  EXPECT_EQ(r.delay_for(10).count(), 5000);
}

TEST(ChatWire, ResponseShapes) {
  EXPECT_EQ(parse_chat_response(R"({"completion":"a"})"), "a");
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"b"}}]})"), "b");
  EXPECT_THROW(parse_chat_response("{}"), Error);
}

TEST(GenParams, Validation) {
  EXPECT_NO_THROW(GenParams::patient().validate());
  EXPECT_THROW((GenParams{-1.0, 1.0, 10}).validate(), Error);
  EXPECT_THROW((GenParams{1.0, 0.0, 10}).validate(), Error);
  EXPECT_THROW((GenParams{1.0, 1.0, 0}).validate(), Error);
}
