#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace autopk {

struct HttpEndpoint {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string api_key;   // sent as a bearer token when non-empty
  std::chrono::seconds timeout{120};
};

struct HttpReply {
  int status = 0;        // 0 when the request never reached the server
  std::string body;
  std::string error;     // transport-level failure description

  bool ok() const { return status >= 200 && status < 300; }
  // 429, 5xx and connection failures are worth another attempt.
  bool retryable() const { return status == 0 || status == 429 || status >= 500; }
};

// POSTs a JSON body to base_url + path.
HttpReply http_post_json(const HttpEndpoint& endpoint, const std::string& path,
                         const std::string& body);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

void default_sleep(std::chrono::milliseconds duration);

// Calls `attempt` until it returns a non-retryable reply or attempts run out.
// The delay before retry k (1-based) is initial_backoff * multiplier^(k-1).
HttpReply with_retries(const RetryPolicy& policy,
                       const std::function<HttpReply()>& attempt,
                       const SleepFn& sleep = default_sleep,
                       int* attempts_made = nullptr);

}  // namespace autopk
