#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "autopk/embedding.hpp"
#include "autopk/llm_gateway.hpp"
#include "autopk/similarity.hpp"
#include "autopk/table.hpp"

namespace autopk {

struct PkParameter {
  std::string canonical_name;               // e.g. "half_life"
  std::string display_name;                 // bound to "{pk parameter}"
  std::vector<std::string> alias_hints;     // "{variants Aliases}"
  std::vector<std::string> exclusion_hints; // "{Non Variants Alias}"
};

enum class VariantProvenance {
  kSeed,
  kExact,
  kHybridValidated,
  kHybridUnvalidated,  // admitted with validation disabled
};

std::string_view to_string(VariantProvenance provenance);
VariantProvenance variant_provenance_from_string(std::string_view s);

struct VariantMatch {
  std::string variant_text;
  CellRef location;
  VariantProvenance provenance = VariantProvenance::kExact;
  double score = 1.0;

  bool operator==(const VariantMatch&) const = default;
};

struct RegistryEntry {
  std::string text;
  VariantProvenance provenance = VariantProvenance::kSeed;
  double score = 1.0;
  std::string origin_table;
};

struct AuditRecord {
  std::string variant;
  std::string origin_table;
  std::string decision;  // seeded, pruned, admitted, rejected, ...
};

// Ordered, duplicate-free variant list for one parameter plus the log of
// every decision that shaped it.
class VariantRegistry {
 public:
  VariantRegistry() = default;
  explicit VariantRegistry(PkParameter parameter);

  const PkParameter& parameter() const { return parameter_; }
  const std::vector<RegistryEntry>& entries() const { return entries_; }
  const std::vector<AuditRecord>& audit_log() const { return audit_; }
  std::vector<std::string> variants() const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  // Registry variant equal to the trimmed cell, if any.
  std::optional<std::string> find_exact(std::string_view cell,
                                        bool case_insensitive = false) const;
  bool contains(std::string_view variant) const;

  // Trims entry.text; returns false (and logs nothing) for duplicates or
  // empty text.
  bool add(RegistryEntry entry, std::string decision);
  // Only for manual pruning between seeding and scanning.
  bool remove(std::string_view variant, std::string decision);
  void log(AuditRecord record);

  nlohmann::ordered_json to_json() const;
  static VariantRegistry from_json(const nlohmann::json& doc,
                                   PkParameter parameter);

 private:
  PkParameter parameter_;
  std::vector<RegistryEntry> entries_;
  std::vector<AuditRecord> audit_;
};

struct Pipeline1Options {
  SimilarityWeights weights;
  SimilarityOptions similarity;
  bool disable_hybrid = false;      // exact matching only
  bool disable_validation = false;  // admit every candidate >= tau
  bool case_insensitive_em = false;
  std::size_t max_validation_exemplars = 10;
};

struct Candidate {
  std::string text;
  CellRef location;
  double score = 0.0;
};

// Memo of similarity components per (cell, variant) pair, shared across
// scans and sweep configurations. Thread-safe.
class ComponentCache {
 public:
  SimilarityComponents get(const std::string& cell, const std::string& variant,
                           EmbeddingProvider& embed,
                           const SimilarityOptions& options);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, SimilarityComponents> entries_;
};

struct ScanResult {
  std::vector<VariantMatch> matches;
  std::vector<Candidate> candidates;
};

// Scans caret-split header fragments, then body cells in row-major order.
// Exact matches short-circuit; otherwise the best hybrid score against the
// registry makes the cell a candidate when it reaches tau. Does not mutate
// the registry.
ScanResult scan_table(const NormalizedTable& table,
                      const VariantRegistry& registry,
                      const Pipeline1Options& options, EmbeddingProvider& embed,
                      ComponentCache* cache = nullptr);

enum class Verdict { kYes, kNo, kUnparseable };
std::string_view to_string(Verdict verdict);

using SeedExtractor =
    std::function<std::vector<std::string>(const NormalizedTable& table)>;
using CandidateValidator = std::function<Verdict(
    const std::string& candidate, const VariantRegistry& registry)>;

struct LlmRoleSettings {
  std::string model;
  GenerationSettings generation;
};

// Prompt bindings for the seed extraction prompt of one table.
Bindings seed_prompt_bindings(const NormalizedTable& table,
                              const PkParameter& parameter);

// Prompt bindings for validating `candidate` against the first
// `max_exemplars` registry variants.
Bindings validation_prompt_bindings(const std::string& candidate,
                                    const VariantRegistry& registry,
                                    std::size_t max_exemplars);

SeedExtractor llm_seed_extractor(LlmGateway& gateway, PkParameter parameter,
                                 PromptTemplate prompt, LlmRoleSettings role);

// With `replay_miss_rejects`, a ReplayMiss is treated as an unparseable
// verdict instead of propagating.
CandidateValidator llm_validator(LlmGateway& gateway, PromptTemplate prompt,
                                 LlmRoleSettings role, std::size_t max_exemplars,
                                 bool replay_miss_rejects = false);

// Runs the extractor over the corpus (sorted by id) and unions the answers
// into `registry` in corpus order. On failure the registry keeps everything
// gathered from earlier tables.
void extract_seed_variants_into(const std::vector<NormalizedTable>& corpus,
                                const SeedExtractor& extractor,
                                VariantRegistry& registry, std::size_t jobs = 1);

VariantRegistry extract_seed_variants(const std::vector<NormalizedTable>& corpus,
                                      const PkParameter& parameter,
                                      const SeedExtractor& extractor,
                                      std::size_t jobs = 1);

// Validates one candidate and, on YES, admits it. With validation disabled
// every candidate is admitted. An unparseable verdict counts as NO.
bool validate_candidate(const Candidate& candidate, const std::string& table_id,
                        VariantRegistry& registry,
                        const CandidateValidator& validator,
                        bool disable_validation = false);

// Interactive pruning: asks keep/drop for every registry entry on `out` and
// reads one answer per line from `in` ("n", "no", "d", "drop" remove the
// entry; anything else, or end of input, keeps it).
void review_registry(VariantRegistry& registry, std::istream& in,
                     std::ostream& out);

struct CandidateLogEntry {
  std::string table_id;
  Candidate candidate;
  std::string decision;
};

// Mutable run state; persisted by callers for resumption after a failure.
struct Pipeline1State {
  VariantRegistry registry;
  bool seeded = false;
  std::map<std::string, std::vector<VariantMatch>> matches;
  std::vector<CandidateLogEntry> candidate_log;
  std::set<std::string> rejected;
};

using ReviewHook = std::function<void(VariantRegistry&)>;

// Seeds the registry (unless state.seeded), applies the review hook, then
// scans each table once in id order. Candidates are validated inline, so a
// variant admitted in one table is an exact match for every later cell.
// Tables already present in state.matches are skipped.
void run_pipeline1(const std::vector<NormalizedTable>& corpus,
                   const Pipeline1Options& options, const SeedExtractor& seeds,
                   const CandidateValidator& validator, EmbeddingProvider& embed,
                   Pipeline1State& state, const ReviewHook& review = {},
                   ComponentCache* cache = nullptr, std::size_t jobs = 1);

// {table_id: [{variant_text, row, col, axis, score, provenance}]}
nlohmann::ordered_json matches_to_json(
    const std::map<std::string, std::vector<VariantMatch>>& matches);
std::map<std::string, std::vector<VariantMatch>> matches_from_json(
    const nlohmann::json& doc);

nlohmann::ordered_json candidate_log_to_json(
    const std::vector<CandidateLogEntry>& log);

// Distinct matched variant strings per table.
std::map<std::string, std::set<std::string>> predicted_variants(
    const std::map<std::string, std::vector<VariantMatch>>& matches);

// Checkpoint form of a run state.
nlohmann::ordered_json state_to_json(const Pipeline1State& state);
Pipeline1State state_from_json(const nlohmann::json& doc,
                               const PkParameter& parameter);

std::vector<NormalizedTable> sorted_by_id(std::vector<NormalizedTable> corpus);

}  // namespace autopk
