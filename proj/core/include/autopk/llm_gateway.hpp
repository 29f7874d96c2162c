#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "autopk/prompts.hpp"
#include "autopk/transport.hpp"

namespace autopk {

struct GenerationSettings {
  double temperature = 0.0;
  double top_p = 0.95;
};

struct LlmRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  double top_p = 0.95;
  std::string cache_key;  // sha256 of the canonical request
};

// Canonical digest of (model, messages, temperature, top_p).
std::string compute_cache_key(const std::string& model,
                              const std::vector<ChatMessage>& messages,
                              double temperature, double top_p);

LlmRequest make_request(std::string model, std::vector<ChatMessage> messages,
                        const GenerationSettings& settings = {});

// OpenAI-compatible /chat/completions body.
nlohmann::json chat_payload(const LlmRequest& request);

enum class ResponseProvenance { kLive, kCache, kReplay };
std::string_view to_string(ResponseProvenance provenance);

struct LlmResponse {
  std::string text;
  ResponseProvenance provenance = ResponseProvenance::kLive;
  std::int64_t latency_ms = 0;
};

// Sends one chat-completions payload and returns the raw HTTP reply.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpReply send(const nlohmann::json& payload) = 0;
};

class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(HttpEndpoint endpoint);
  HttpReply send(const nlohmann::json& payload) override;

 private:
  HttpEndpoint endpoint_;
};

// Wraps a callable; convenient for tests and fault injection.
class FunctionChatTransport final : public ChatTransport {
 public:
  using Handler = std::function<HttpReply(const nlohmann::json&)>;
  explicit FunctionChatTransport(Handler handler);
  HttpReply send(const nlohmann::json& payload) override;

 private:
  Handler handler_;
};

// Offline stand-in for a chat model. Rules are checked in order against the
// final user message; the first rule whose every "contains" string occurs
// (and whose optional "model" equals the request model) supplies the answer.
//
//   {"rules": [{"contains": ["..."], "model": "...", "response": "..."}],
//    "default": "..."}
//
// Without a match or default, replies 404.
class ScriptedChatTransport final : public ChatTransport {
 public:
  explicit ScriptedChatTransport(const nlohmann::json& script);
  static std::shared_ptr<ScriptedChatTransport> from_file(
      const std::filesystem::path& path);

  HttpReply send(const nlohmann::json& payload) override;

 private:
  struct Rule {
    std::vector<std::string> contains;
    std::optional<std::string> model;
    std::string response;
  };
  std::vector<Rule> rules_;
  std::optional<std::string> default_;
};

// Builds a chat-completions response body carrying `content`.
std::string chat_completion_body(const std::string& content);

// Directory of `<cache_key>.json` files, each holding the request and the
// response text. Writes go to a temp file that is renamed into place.
class ResponseStore {
 public:
  explicit ResponseStore(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const LlmRequest& request, const std::string& text);
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::string> memo_;
};

// Token bucket with capacity one: calls are spaced 60/rpm seconds apart.
// A non-positive rate disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute);
  void acquire();

 private:
  std::chrono::nanoseconds interval_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_;
};

enum class GatewayMode {
  kLive,    // consult the store, call the transport on a miss, record
  kReplay,  // store only; a miss throws ReplayMiss
};

struct GatewayOptions {
  GatewayMode mode = GatewayMode::kLive;
  std::filesystem::path store_dir;  // optional in live mode
  RetryPolicy retry;
  double requests_per_minute = 0.0;
  SleepFn sleep = default_sleep;
};

class LlmGateway {
 public:
  LlmGateway(GatewayOptions options, std::shared_ptr<ChatTransport> transport);

  // Throws Error(kProviderUnavailable) once retries are exhausted, and
  // Error(kReplayMiss) in replay mode when the key was never recorded.
  LlmResponse complete(const LlmRequest& request);

  GatewayMode mode() const { return options_.mode; }
  std::size_t live_calls() const { return live_calls_; }
  std::size_t transport_attempts() const { return attempts_; }

 private:
  GatewayOptions options_;
  std::shared_ptr<ChatTransport> transport_;
  std::unique_ptr<ResponseStore> store_;
  RateLimiter limiter_;
  std::mutex memo_mutex_;
  std::unordered_map<std::string, std::string> memo_;
  std::atomic<std::size_t> live_calls_{0};
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace autopk
