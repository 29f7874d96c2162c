#include "autopk/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "autopk/embedding.hpp"
#include "autopk/error.hpp"
#include "autopk/text.hpp"

namespace autopk {

void validate(const SimilarityWeights& w) {
  if (w.alpha < 0 || w.beta < 0 || w.gamma < 0) {
    throw Error(ErrorCode::kInvalidConfig, "similarity weights must be >= 0");
  }
  if (std::abs(w.alpha + w.beta + w.gamma - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig,
                "similarity weights must sum to 1");
  }
  if (!(w.tau >= 0.0 && w.tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "tau must lie in [0, 1]");
  }
}

std::set<std::string> tokenize(std::string_view s) {
  std::set<std::string> tokens;
  const std::u32string points = text::to_code_points(text::to_lower(s));
  std::u32string current;
  auto flush = [&] {
    if (current.empty()) return;
    tokens.insert(text::to_utf8(current));
    current.clear();
  };
  for (char32_t c : points) {
    if (text::is_space(c) || c == U'_' || c == U'-' || c == U'(' || c == U')') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  return tokens;
}

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double levenshtein_similarity(std::string_view c, std::string_view v,
                              bool case_sensitive) {
  const auto a = text::to_code_points(text::normalize(c, !case_sensitive));
  const auto b = text::to_code_points(text::normalize(v, !case_sensitive));
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(a, b)) /
                   static_cast<double>(longest);
}

double token_overlap(std::string_view c, std::string_view v) {
  const auto tc = tokenize(c);
  const auto tv = tokenize(v);
  if (tc.empty() && tv.empty()) return 1.0;
  if (tc.empty() || tv.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& t : tc) shared += tv.count(t);
  return 2.0 * static_cast<double>(shared) /
         static_cast<double>(tc.size() + tv.size());
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "embedding dims " + std::to_string(a.dim()) + " and " +
                    std::to_string(b.dim()) + " differ");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // Self-similarity is exactly 1; the division below can land an ulp short.
  if (a.values == b.values) return 1.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double combine(const SimilarityComponents& s, const SimilarityWeights& w) {
  return w.alpha * s.cosine + w.beta * s.levenshtein + w.gamma * s.token;
}

SimilarityComponents similarity_components(std::string_view c,
                                           std::string_view v,
                                           EmbeddingProvider& embed,
                                           const SimilarityOptions& options) {
  SimilarityComponents s;
  s.cosine = cosine_similarity(embed.embed(c), embed.embed(v));
  s.levenshtein = levenshtein_similarity(c, v, options.lev_case_sensitive);
  s.token = token_overlap(c, v);
  return s;
}

double hybrid_similarity(std::string_view c, std::string_view v,
                         const SimilarityWeights& weights,
                         EmbeddingProvider& embed,
                         const SimilarityOptions& options) {
  return combine(similarity_components(c, v, embed, options), weights);
}

}  // namespace autopk
