#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "autopk/similarity.hpp"
#include "autopk/transport.hpp"

namespace autopk {

// Text encoder used by the cosine component. Implementations must be safe for
// concurrent calls and return identical vectors for identical text.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual EmbeddingVector embed(std::string_view text) = 0;
  virtual std::string model_id() const = 0;
};

// Offline, deterministic encoder: character n-grams of the NFC-lowercased
// text are hashed (seeded FNV-1a) into a fixed number of buckets. Strings
// that share many n-grams get high cosine, unrelated strings get near 0.
class HashedNgramEmbedder final : public EmbeddingProvider {
 public:
  explicit HashedNgramEmbedder(std::size_t dim = 512, std::uint64_t seed = 17,
                               std::size_t ngram = 3);

  EmbeddingVector embed(std::string_view text) override;
  std::string model_id() const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  std::size_t ngram_;
};

// OpenAI-compatible embeddings endpoint:
// POST {base}/embeddings {"model", "input": [text]} -> {"data": [{"embedding"}]}
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model,
                        RetryPolicy retry = {});

  EmbeddingVector embed(std::string_view text) override;
  std::string model_id() const override { return model_; }

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  RetryPolicy retry_;
};

// Memoizes another provider. With a store path, entries are also appended to
// a JSON-lines file keyed by sha256(model_id + '\0' + text) and reloaded on
// construction.
class CachingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner,
                                    std::filesystem::path store = {});

  EmbeddingVector embed(std::string_view text) override;
  std::string model_id() const override { return inner_->model_id(); }

  std::size_t size() const;
  std::size_t misses() const { return misses_; }

 private:
  std::string key_for(std::string_view text) const;

  std::shared_ptr<EmbeddingProvider> inner_;
  std::filesystem::path store_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EmbeddingVector> entries_;
  std::size_t misses_ = 0;
};

}  // namespace autopk
