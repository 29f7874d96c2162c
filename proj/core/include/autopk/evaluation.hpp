#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autopk/embedding.hpp"
#include "autopk/table.hpp"

namespace autopk {

struct EvalThresholds {
  double delta = 0.75;  // column header Levenshtein
  double theta = 0.5;   // mean row token overlap, strict
  double kappa = 0.8;   // cell similarity
};

void validate(const EvalThresholds& thresholds);

enum class Comparator { kLevenshtein, kCosine };
std::string_view to_string(Comparator comparator);
Comparator comparator_from_string(std::string_view s);

// Keyed by cleaned gold header; unknown columns use Levenshtein.
using ComparatorMap = std::map<std::string, Comparator, std::less<>>;
ComparatorMap default_comparators();

// Lowercase, trim, collapse whitespace, strip one pair of surrounding quotes.
std::string clean_cell(std::string_view s);

struct ScoredPair {
  std::size_t gt = 0;
  std::size_t gen = 0;
  double score = 0.0;
};

// Best-first greedy assignment over a gt x gen score matrix: pairs are taken
// in descending score order (ties: lower gt, then lower gen index) while both
// sides are free and the score is accepted.
std::vector<ScoredPair> greedy_assign(
    const std::vector<std::vector<double>>& scores, double threshold,
    bool strict);

struct AlignmentResult {
  std::map<std::size_t, std::size_t> column_map;  // gen col -> gt col
  std::map<std::size_t, std::size_t> row_map;     // gt row -> gen row
  std::vector<std::size_t> missing_cols;          // gt columns
  std::vector<std::size_t> extra_cols;            // gen columns
  std::vector<std::size_t> missing_rows;          // gt rows
  std::vector<std::size_t> extra_rows;            // gen rows
};

void align_columns(const NormalizedTable& gen, const NormalizedTable& gt,
                   double delta, AlignmentResult& result);

// Mean token overlap between a gt row and a gen row across gt columns;
// columns empty on both sides are skipped, and a row pair with nothing to
// compare scores 1.
double row_score(const NormalizedTable& gen, const NormalizedTable& gt,
                 const std::map<std::size_t, std::size_t>& gt_to_gen_col,
                 std::size_t gt_row, std::size_t gen_row);

void align_rows(const NormalizedTable& gen, const NormalizedTable& gt,
                double theta, AlignmentResult& result);

AlignmentResult align(const NormalizedTable& gen, const NormalizedTable& gt,
                      const EvalThresholds& thresholds);

struct CellCounts {
  std::size_t tp = 0;
  std::size_t fp_mismatch = 0;
  std::size_t fp_extra = 0;
  std::size_t fn = 0;
  std::size_t generated_cells = 0;
  std::size_t extra_row_cells = 0;

  std::size_t fp() const { return fp_mismatch + fp_extra; }
  CellCounts& operator+=(const CellCounts& other);
};

// Counts cells of gen (reshaped to gt by `alignment`) against gt.
CellCounts compare_cells(const NormalizedTable& gen, const NormalizedTable& gt,
                         const AlignmentResult& alignment, double kappa,
                         EmbeddingProvider& embed,
                         const ComparatorMap& comparators = default_comparators());

struct Metrics {
  CellCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double hallucination_rate = 0.0;
};

Metrics compute_metrics(const CellCounts& counts);
nlohmann::ordered_json to_json(const Metrics& metrics);

struct TableEval {
  std::string table_id;
  Metrics metrics;
};

struct EvalReport {
  Metrics total;
  std::vector<TableEval> per_table;
};

nlohmann::ordered_json to_json(const EvalReport& report);
std::string per_table_csv(const EvalReport& report);

Metrics evaluate_table(const NormalizedTable& gen, const NormalizedTable& gt,
                       const EvalThresholds& thresholds,
                       EmbeddingProvider& embed,
                       const ComparatorMap& comparators = default_comparators());

// Tables are evaluated against their gold in id order; a missing prediction
// is an empty table.
EvalReport evaluate_corpus(const std::map<std::string, NormalizedTable>& predicted,
                           const std::map<std::string, NormalizedTable>& gold,
                           const EvalThresholds& thresholds,
                           EmbeddingProvider& embed,
                           const ComparatorMap& comparators = default_comparators());

// Exact-match scoring of predicted variant sets, micro-averaged. Predicted
// tables without gold are skipped with a warning; gold tables without a
// prediction count as all-FN.
EvalReport eval_pipeline1(
    const std::map<std::string, std::set<std::string>>& predicted,
    const std::map<std::string, std::set<std::string>>& gold);

struct GoldEntry {
  std::string table_id;
  std::string parameter;
  std::set<std::string> gold_variants;
  std::optional<std::filesystem::path> gold_table;  // resolved path
};

// Reads every *.json in `dir` ({table_id, parameter, gold_variants,
// gold_table}); with a non-empty `parameter` only matching entries are kept.
std::vector<GoldEntry> load_gold_dir(const std::filesystem::path& dir,
                                     const std::string& parameter = {});

std::map<std::string, std::set<std::string>> gold_variant_sets(
    const std::vector<GoldEntry>& entries);

}  // namespace autopk
