#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace autopk {

class EmbeddingProvider;

// Weights of the hybrid score and the admission threshold.
struct SimilarityWeights {
  double alpha = 0.6;  // cosine
  double beta = 0.2;   // Levenshtein
  double gamma = 0.2;  // token overlap
  double tau = 0.69;

  bool operator==(const SimilarityWeights&) const = default;
};

// Throws Error(kInvalidConfig) on negative weights, a weight sum away from 1
// by more than 1e-9, or tau outside [0, 1].
void validate(const SimilarityWeights& weights);

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Lowercased tokens split on whitespace, '_', '-', '(' and ')'. '/' and '.'
// are not separators, so "t1/2" stays one token.
std::set<std::string> tokenize(std::string_view s);

// Edit distance over Unicode code points.
std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

// 1 - distance / max(|c|, |v|), computed after NFC normalization and (unless
// case_sensitive) lowercasing. Two empty strings score 1.
double levenshtein_similarity(std::string_view c, std::string_view v,
                              bool case_sensitive = false);

// Sørensen–Dice coefficient over tokenize(). 1 when both token sets are
// empty, 0 when exactly one is.
double token_overlap(std::string_view c, std::string_view v);

// Cosine clamped to [0, 1]; 0 when either vector is all zeros. Throws
// Error(kDimensionMismatch) when dims differ.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct SimilarityComponents {
  double cosine = 0.0;
  double levenshtein = 0.0;
  double token = 0.0;
};

double combine(const SimilarityComponents& components,
               const SimilarityWeights& weights);

struct SimilarityOptions {
  bool lev_case_sensitive = false;
};

SimilarityComponents similarity_components(std::string_view c,
                                           std::string_view v,
                                           EmbeddingProvider& embed,
                                           const SimilarityOptions& options = {});

// alpha * Cos + beta * Lev + gamma * Tok.
double hybrid_similarity(std::string_view c, std::string_view v,
                         const SimilarityWeights& weights,
                         EmbeddingProvider& embed,
                         const SimilarityOptions& options = {});

}  // namespace autopk
