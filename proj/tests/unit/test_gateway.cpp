#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>

#include "autopk/digest.hpp"
#include "autopk/error.hpp"
#include "autopk/llm_gateway.hpp"
#include "autopk/prompts.hpp"
#include "autopk/response_parsing.hpp"
#include "local_server.hpp"

using namespace autopk;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("autopk_gw_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

LlmRequest hello(const std::string& text = "hello") {
  return make_request("m", {{"user", text}});
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception";
  return ErrorCode::kIo;
}

}  // namespace

TEST(Prompts, PlaceholdersAndRender) {
  PromptTemplate p;
  p.body = "A {x} and {y} then {x} {{not}}";
  EXPECT_EQ(placeholders(p.body), (std::vector<std::string>{"x", "y", "not"}));
  p.body = "A {x} and {y}";
  p.shots = {{"q1", "a1"}};
  const auto msgs = render(p, {{"x", "{y}"}, {"y", "2"}});
  ASSERT_EQ(msgs.size(), 3u);
  EXPECT_EQ(msgs[0], (ChatMessage{"user", "q1"}));
  EXPECT_EQ(msgs[1], (ChatMessage{"assistant", "a1"}));
  EXPECT_EQ(msgs[2].content, "A {y} and 2");  // bound values are not rescanned
  EXPECT_EQ(code_of([&] { render(p, {{"x", "1"}}); }), ErrorCode::kUnboundPlaceholder);
}

TEST(Prompts, DefaultTemplatesAndShotCount) {
  for (auto role : {PromptRole::kVariantExtraction, PromptRole::kVariantValidation,
                    PromptRole::kTableReconstruction, PromptRole::kDirectBaseline}) {
    const auto t = default_template(role);
    EXPECT_FALSE(placeholders(t.body).empty());
    EXPECT_EQ(prompt_role_from_string(to_string(role)), role);
  }
  const auto recon = placeholders(default_template(PromptRole::kTableReconstruction).body);
  EXPECT_NE(std::find(recon.begin(), recon.end(), std::string(slot::kCustomTable)), recon.end());
  PromptTemplate p;
  p.shots = std::vector<Shot>(7, Shot{"i", "o"});
  EXPECT_EQ(with_shot_count(p, 5).shots.size(), 5u);
  EXPECT_EQ(with_shot_count(p, 0).shots.size(), 0u);
  EXPECT_EQ(value_or_none(std::nullopt), "None");
}

TEST(Prompts, ShippedShotFiles) {
  for (const char* role : {"variant_extraction", "variant_validation",
                           "table_reconstruction", "direct_baseline"}) {
    const auto shots =
        load_shots(fs::path(AUTOPK_SOURCE_DIR) / "data/shots" / (std::string(role) + ".json"));
    EXPECT_EQ(shots.size(), kDefaultShotCount) << role;
  }
}

TEST(Gateway, CacheKeyIsCanonical) {
  const auto a = compute_cache_key("m", {{"user", "x"}}, 0.0, 0.95);
  EXPECT_EQ(a.size(), 64u);
  EXPECT_EQ(a, compute_cache_key("m", {{"user", "x"}}, 0.0, 0.95));
  EXPECT_NE(a, compute_cache_key("m2", {{"user", "x"}}, 0.0, 0.95));
  EXPECT_NE(a, compute_cache_key("m", {{"user", "y"}}, 0.0, 0.95));
  EXPECT_NE(a, compute_cache_key("m", {{"user", "x"}}, 0.1, 0.95));
  EXPECT_NE(a, compute_cache_key("m", {{"system", "x"}}, 0.0, 0.95));
  EXPECT_EQ(hello().cache_key, compute_cache_key("m", {{"user", "hello"}}, 0.0, 0.95));
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Gateway, ReplayMissAndStoreRoundTrip) {
  const auto dir = fresh_dir("store");
  int sent = 0;
  auto transport = std::make_shared<FunctionChatTransport>([&](const json& payload) {
    ++sent;
    EXPECT_EQ(payload.at("model"), "m");
    return HttpReply{200, chat_completion_body("hi there"), ""};
  });
  {
    LlmGateway replay({GatewayMode::kReplay, dir}, nullptr);
    EXPECT_EQ(code_of([&] { replay.complete(hello()); }), ErrorCode::kReplayMiss);
  }
  {
    LlmGateway live({GatewayMode::kLive, dir}, transport);
    const auto r = live.complete(hello());
    EXPECT_EQ(r.text, "hi there");
    EXPECT_EQ(r.provenance, ResponseProvenance::kLive);
    EXPECT_EQ(live.complete(hello()).provenance, ResponseProvenance::kCache);
    EXPECT_EQ(sent, 1);
  }
  EXPECT_TRUE(fs::exists(dir / (hello().cache_key + ".json")));
  LlmGateway replay({GatewayMode::kReplay, dir}, nullptr);
  const auto r = replay.complete(hello());
  EXPECT_EQ(r.text, "hi there");
  EXPECT_EQ(r.provenance, ResponseProvenance::kReplay);
  EXPECT_EQ(replay.live_calls(), 0u);
  fs::remove_all(dir);
}

TEST(Gateway, RetriesTransientErrorsOverHttp) {
  LocalServer srv;
  int hits = 0;
  std::string auth;
  srv.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    if (++hits <= 2) {
      res.status = 429;
      return;
    }
    res.set_content(chat_completion_body("ok"), "application/json");
  });
  srv.start();
  std::vector<long long> sleeps;
  GatewayOptions opts;
  opts.retry.initial_backoff = std::chrono::milliseconds(100);
  opts.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); };
  LlmGateway gw(opts, std::make_shared<HttpChatTransport>(HttpEndpoint{srv.base_url(), "sk"}));
  EXPECT_EQ(gw.complete(hello()).text, "ok");
  EXPECT_EQ(hits, 3);
  EXPECT_EQ(gw.transport_attempts(), 3u);
  EXPECT_EQ(sleeps, (std::vector<long long>{100, 200}));
  EXPECT_EQ(auth, "Bearer sk");
}

TEST(Gateway, ExhaustedRetriesAndNonRetryable) {
  int calls = 0;
  GatewayOptions opts;
  opts.sleep = [](std::chrono::milliseconds) {};
  LlmGateway failing(opts, std::make_shared<FunctionChatTransport>([&](const json&) {
    ++calls;
    return HttpReply{500, "", ""};
  }));
  EXPECT_EQ(code_of([&] { failing.complete(hello()); }), ErrorCode::kProviderUnavailable);
  EXPECT_EQ(calls, 3);
  calls = 0;
  LlmGateway not_found(opts, std::make_shared<FunctionChatTransport>([&](const json&) {
    ++calls;
    return HttpReply{404, "", ""};
  }));
  EXPECT_EQ(code_of([&] { not_found.complete(hello()); }), ErrorCode::kProviderUnavailable);
  EXPECT_EQ(calls, 1);
}

TEST(Gateway, ConnectionRefusedIsProviderUnavailable) {
  GatewayOptions opts;
  opts.retry.max_attempts = 1;
  LlmGateway gw(opts, std::make_shared<HttpChatTransport>(
                          HttpEndpoint{"http://127.0.0.1:1/v1", "", std::chrono::seconds(2)}));
  EXPECT_EQ(code_of([&] { gw.complete(hello()); }), ErrorCode::kProviderUnavailable);
}

TEST(Gateway, RateLimiterSpacesCalls) {
  RateLimiter limiter(1200.0);  // 50 ms apart
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  EXPECT_GE(ms, 140);
  RateLimiter off(0);
  off.acquire();
  off.acquire();
}

TEST(ScriptedTransport, FirstMatchingRuleWins) {
  ScriptedChatTransport t(json::parse(R"({
    "rules": [
      {"contains": ["alpha", "beta"], "response": "both"},
      {"contains": ["alpha"], "model": "other", "response": "model-specific"},
      {"contains": ["alpha"], "response": "one"}
    ]})"));
  auto ask = [&](const std::string& model, const std::string& text) {
    return t.send(chat_payload(make_request(model, {{"user", "beta"}, {"user", text}})));
  };
  auto content = [](const HttpReply& r) {
    return json::parse(r.body)["choices"][0]["message"]["content"].get<std::string>();
  };
  EXPECT_EQ(content(ask("m", "alpha beta")), "both");
  EXPECT_EQ(content(ask("other", "alpha")), "model-specific");
  EXPECT_EQ(content(ask("m", "alpha")), "one");
  EXPECT_EQ(ask("m", "gamma").status, 404);  // earlier messages are not matched
}

TEST(Parsing, VariantList) {
  EXPECT_EQ(parse_variant_list("Variants: $T1/2$, $ Half-life $, $T1/2$ and $$"),
            (std::vector<std::string>{"T1/2", "Half-life"}));
  EXPECT_TRUE(parse_variant_list("None").empty());
  EXPECT_EQ(parse_variant_list("$a$ $b"), (std::vector<std::string>{"a"}));
}

TEST(Parsing, Verdict) {
  EXPECT_EQ(parse_verdict("YES"), true);
  EXPECT_EQ(parse_verdict("Answer: no."), false);
  EXPECT_EQ(parse_verdict("yes, it matches"), true);
  EXPECT_EQ(parse_verdict("Yesterday nothing"), std::nullopt);
  EXPECT_EQ(parse_verdict("I cannot tell"), std::nullopt);
}

TEST(Parsing, CsvBlock) {
  const std::vector<std::string> header{"a", "b"};
  const auto block = parse_csv_block(
      "Here you go:\n```csv\nA , B\n1,None\n\na,b\n2,3,4\n```\ntrailing", header);
  EXPECT_EQ(block.rows, (csv::Grid{{"1", ""}, {"2", "3"}}));
  EXPECT_EQ(block.truncated_rows, 1u);
  EXPECT_EQ(code_of([&] { parse_csv_block("no table here", header); }),
            ErrorCode::kNoTableFound);
}
