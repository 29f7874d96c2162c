#include "autopk/llm_gateway.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "autopk/digest.hpp"
#include "autopk/error.hpp"

namespace autopk {
namespace {

nlohmann::json messages_json(const std::vector<ChatMessage>& messages) {
  auto out = nlohmann::json::array();
  for (const auto& m : messages) {
    out.push_back({{"role", m.role}, {"content", m.content}});
  }
  return out;
}

std::string extract_content(const std::string& body) {
  try {
    const auto doc = nlohmann::json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("malformed chat completion: ") + e.what());
  }
}

}  // namespace

std::string compute_cache_key(const std::string& model,
                              const std::vector<ChatMessage>& messages,
                              double temperature, double top_p) {
  const nlohmann::json canonical = {{"model", model},
                                    {"messages", messages_json(messages)},
                                    {"temperature", temperature},
                                    {"top_p", top_p}};
  return sha256_hex(canonical.dump());
}

LlmRequest make_request(std::string model, std::vector<ChatMessage> messages,
                        const GenerationSettings& settings) {
  LlmRequest request;
  request.cache_key = compute_cache_key(model, messages, settings.temperature,
                                        settings.top_p);
  request.model = std::move(model);
  request.messages = std::move(messages);
  request.temperature = settings.temperature;
  request.top_p = settings.top_p;
  return request;
}

nlohmann::json chat_payload(const LlmRequest& request) {
  return {{"model", request.model},
          {"messages", messages_json(request.messages)},
          {"temperature", request.temperature},
          {"top_p", request.top_p}};
}

std::string_view to_string(ResponseProvenance provenance) {
  switch (provenance) {
    case ResponseProvenance::kLive: return "live";
    case ResponseProvenance::kCache: return "cache";
    case ResponseProvenance::kReplay: return "replay";
  }
  return "unknown";
}

HttpChatTransport::HttpChatTransport(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

HttpReply HttpChatTransport::send(const nlohmann::json& payload) {
  return http_post_json(endpoint_, "/chat/completions", payload.dump());
}

FunctionChatTransport::FunctionChatTransport(Handler handler)
    : handler_(std::move(handler)) {}

HttpReply FunctionChatTransport::send(const nlohmann::json& payload) {
  return handler_(payload);
}

std::string chat_completion_body(const std::string& content) {
  return nlohmann::json{
      {"object", "chat.completion"},
      {"choices",
       {{{"index", 0},
         {"message", {{"role", "assistant"}, {"content", content}}},
         {"finish_reason", "stop"}}}}}
      .dump();
}

ScriptedChatTransport::ScriptedChatTransport(const nlohmann::json& script) {
  try {
    for (const auto& r : script.value("rules", nlohmann::json::array())) {
      Rule rule;
      rule.contains = r.value("contains", std::vector<std::string>{});
      if (r.contains("model")) rule.model = r.at("model").get<std::string>();
      rule.response = r.at("response").get<std::string>();
      rules_.push_back(std::move(rule));
    }
    if (script.contains("default")) {
      default_ = script.at("default").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                std::string("malformed chat script: ") + e.what());
  }
}

std::shared_ptr<ScriptedChatTransport> ScriptedChatTransport::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig, "cannot read chat script " + path.string());
  }
  try {
    return std::make_shared<ScriptedChatTransport>(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig,
                "chat script " + path.string() + ": " + e.what());
  }
}

HttpReply ScriptedChatTransport::send(const nlohmann::json& payload) {
  std::string prompt;
  const auto& messages = payload.at("messages");
  if (!messages.empty()) prompt = messages.back().at("content").get<std::string>();
  const auto model = payload.value("model", std::string());

  for (const auto& rule : rules_) {
    if (rule.model && *rule.model != model) continue;
    bool all = true;
    for (const auto& needle : rule.contains) {
      if (prompt.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return {200, chat_completion_body(rule.response), {}};
  }
  if (default_) return {200, chat_completion_body(*default_), {}};
  return {404, R"({"error":{"message":"no scripted response"}})", {}};
}

ResponseStore::ResponseStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create response store " + dir_.string());
  }
}

std::optional<std::string> ResponseStore::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  std::ifstream in(dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    const auto doc = nlohmann::json::parse(in);
    auto text = doc.at("response").get<std::string>();
    memo_.emplace(key, text);
    return text;
  } catch (const nlohmann::json::exception& e) {
    spdlog::warn("response store: ignoring unreadable entry {}: {}", key, e.what());
    return std::nullopt;
  }
}

void ResponseStore::put(const LlmRequest& request, const std::string& text) {
  nlohmann::ordered_json doc;
  doc["cache_key"] = request.cache_key;
  doc["model"] = request.model;
  doc["temperature"] = request.temperature;
  doc["top_p"] = request.top_p;
  auto messages = nlohmann::ordered_json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  doc["messages"] = std::move(messages);
  doc["response"] = text;

  std::lock_guard lock(mutex_);
  const auto final_path = dir_ / (request.cache_key + ".json");
  std::ostringstream tmp_name;
  tmp_name << request.cache_key << ".tmp." << std::this_thread::get_id();
  const auto tmp_path = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp_path.string());
    out << doc.dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp_path, final_path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot commit " + final_path.string());
  memo_[request.cache_key] = text;
}

RateLimiter::RateLimiter(double requests_per_minute)
    : interval_(requests_per_minute > 0
                    ? std::chrono::nanoseconds(static_cast<long long>(
                          60e9 / requests_per_minute))
                    : std::chrono::nanoseconds::zero()),
      next_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

LlmGateway::LlmGateway(GatewayOptions options,
                       std::shared_ptr<ChatTransport> transport)
    : options_(std::move(options)),
      transport_(std::move(transport)),
      limiter_(options_.requests_per_minute) {
  if (!options_.store_dir.empty()) {
    store_ = std::make_unique<ResponseStore>(options_.store_dir);
  }
  if (options_.mode == GatewayMode::kReplay && !store_) {
    throw Error(ErrorCode::kInvalidConfig, "replay mode needs a response store");
  }
  if (options_.mode == GatewayMode::kLive && !transport_) {
    throw Error(ErrorCode::kInvalidConfig, "live mode needs a chat transport");
  }
}

LlmResponse LlmGateway::complete(const LlmRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - started)
        .count();
  };
  const auto stored_provenance = options_.mode == GatewayMode::kReplay
                                     ? ResponseProvenance::kReplay
                                     : ResponseProvenance::kCache;
  {
    std::lock_guard lock(memo_mutex_);
    if (auto it = memo_.find(request.cache_key); it != memo_.end()) {
      return {it->second, stored_provenance, elapsed_ms()};
    }
  }
  if (store_) {
    if (auto text = store_->get(request.cache_key)) {
      std::lock_guard lock(memo_mutex_);
      memo_.emplace(request.cache_key, *text);
      return {*text, stored_provenance, elapsed_ms()};
    }
  }
  if (options_.mode == GatewayMode::kReplay) {
    throw Error(ErrorCode::kReplayMiss,
                "no recorded response for request " + request.cache_key +
                    " (model " + request.model + ")");
  }

  const auto payload = chat_payload(request);
  int attempts = 0;
  const HttpReply reply = with_retries(
      options_.retry,
      [&] {
        limiter_.acquire();
        ++attempts_;
        return transport_->send(payload);
      },
      options_.sleep, &attempts);
  if (!reply.ok()) {
    throw Error(ErrorCode::kProviderUnavailable,
                "chat completion failed after " + std::to_string(attempts) +
                    " attempt(s): status " + std::to_string(reply.status) +
                    (reply.error.empty() ? "" : " (" + reply.error + ")"));
  }
  std::string text = extract_content(reply.body);
  ++live_calls_;
  if (store_) store_->put(request, text);
  {
    std::lock_guard lock(memo_mutex_);
    memo_.emplace(request.cache_key, text);
  }
  return {std::move(text), ResponseProvenance::kLive, elapsed_ms()};
}

}  // namespace autopk
