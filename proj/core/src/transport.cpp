#include "autopk/transport.hpp"

#include <httplib.h>

#include <cmath>
#include <thread>

#include "autopk/error.hpp"

namespace autopk {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path component, no trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "base URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

}  // namespace

HttpReply http_post_json(const HttpEndpoint& endpoint, const std::string& path,
                         const std::string& body) {
  const auto url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }

  HttpReply reply;
  auto result = client.Post(url.prefix + path, headers, body, "application/json");
  if (!result) {
    reply.error = httplib::to_string(result.error());
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  return reply;
}

void default_sleep(std::chrono::milliseconds duration) {
  if (duration.count() > 0) std::this_thread::sleep_for(duration);
}

HttpReply with_retries(const RetryPolicy& policy,
                       const std::function<HttpReply()>& attempt,
                       const SleepFn& sleep, int* attempts_made) {
  const int max_attempts = std::max(1, policy.max_attempts);
  HttpReply reply;
  for (int k = 1; k <= max_attempts; ++k) {
    if (attempts_made) *attempts_made = k;
    reply = attempt();
    if (reply.ok() || !reply.retryable() || k == max_attempts) break;
    const double factor = std::pow(policy.multiplier, k - 1);
    sleep(std::chrono::milliseconds(static_cast<long long>(
        static_cast<double>(policy.initial_backoff.count()) * factor)));
  }
  return reply;
}

}  // namespace autopk
