#include "autopk/embedding.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "autopk/digest.hpp"
#include "autopk/error.hpp"
#include "autopk/text.hpp"

namespace autopk {

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dim, std::uint64_t seed,
                                         std::size_t ngram)
    : dim_(dim), seed_(seed), ngram_(ngram) {
  if (dim_ == 0 || ngram_ == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "hashed embedder needs positive dim and n-gram size");
  }
}

EmbeddingVector HashedNgramEmbedder::embed(std::string_view input) {
  EmbeddingVector out;
  out.values.assign(dim_, 0.0);
  const std::u32string points =
      text::to_code_points(text::collapse_whitespace(text::normalize(input)));
  if (points.empty()) return out;

  std::u32string padded;
  padded.reserve(points.size() + 2);
  padded.push_back(U'\u0002');
  padded += points;
  padded.push_back(U'\u0003');
  const std::size_t n = std::min(ngram_, padded.size());
  for (std::size_t i = 0; i + n <= padded.size(); ++i) {
    const std::string gram = text::to_utf8(padded.substr(i, n));
    out.values[fnv1a64(gram, seed_) % dim_] += 1.0;
  }
  return out;
}

std::string HashedNgramEmbedder::model_id() const {
  return "hashed-ngram-" + std::to_string(ngram_) + "-d" +
         std::to_string(dim_) + "-s" + std::to_string(seed_);
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEndpoint endpoint,
                                             std::string model,
                                             RetryPolicy retry)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      retry_(retry) {}

EmbeddingVector HttpEmbeddingProvider::embed(std::string_view text) {
  nlohmann::json payload = {{"model", model_},
                            {"input", nlohmann::json::array({std::string(text)})}};
  const std::string body = payload.dump();
  const HttpReply reply = with_retries(
      retry_, [&] { return http_post_json(endpoint_, "/embeddings", body); });
  if (!reply.ok()) {
    throw Error(ErrorCode::kProviderUnavailable,
                "embedding request failed (status " +
                    std::to_string(reply.status) + ") " + reply.error);
  }
  try {
    const auto doc = nlohmann::json::parse(reply.body);
    EmbeddingVector out;
    out.values = doc.at("data").at(0).at("embedding").get<std::vector<double>>();
    for (double v : out.values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kProviderUnavailable,
                    "embedding contains non-finite values");
      }
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                std::string("malformed embedding response: ") + e.what());
  }
}

CachingEmbeddingProvider::CachingEmbeddingProvider(
    std::shared_ptr<EmbeddingProvider> inner, std::filesystem::path store)
    : inner_(std::move(inner)), store_(std::move(store)) {
  if (store_.empty() || !std::filesystem::exists(store_)) return;
  std::ifstream in(store_);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      entries_[doc.at("key").get<std::string>()] =
          EmbeddingVector{doc.at("embedding").get<std::vector<double>>()};
    } catch (const nlohmann::json::exception&) {
      // A torn final line from an interrupted append is skipped.
      spdlog::warn("embedding cache {}: skipping malformed line {}",
                   store_.string(), line_no);
    }
  }
}

std::string CachingEmbeddingProvider::key_for(std::string_view text) const {
  std::string material = inner_->model_id();
  material.push_back('\0');
  material.append(text);
  return sha256_hex(material);
}

EmbeddingVector CachingEmbeddingProvider::embed(std::string_view text) {
  const std::string key = key_for(text);
  {
    std::lock_guard lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  EmbeddingVector vector = inner_->embed(text);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = entries_.emplace(key, std::move(vector));
  if (inserted) {
    ++misses_;
    if (!store_.empty()) {
      std::ofstream out(store_, std::ios::app);
      out << nlohmann::json{{"key", key}, {"embedding", it->second.values}}.dump()
          << '\n';
    }
  }
  return it->second;
}

std::size_t CachingEmbeddingProvider::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace autopk
