#include "autopk/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "autopk/error.hpp"
#include "autopk/similarity.hpp"
#include "autopk/text.hpp"

namespace autopk {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

const std::string& cell_at(const NormalizedTable& t, std::size_t r,
                           std::size_t c) {
  static const std::string empty;
  if (r >= t.rows.size() || c >= t.rows[r].size()) return empty;
  return t.rows[r][c];
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void validate(const EvalThresholds& t) {
  for (double v : {t.delta, t.theta, t.kappa}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidConfig,
                  "evaluation thresholds must lie in [0, 1]");
    }
  }
}

std::string_view to_string(Comparator comparator) {
  return comparator == Comparator::kCosine ? "cosine" : "levenshtein";
}

Comparator comparator_from_string(std::string_view s) {
  if (s == "cosine") return Comparator::kCosine;
  if (s == "levenshtein") return Comparator::kLevenshtein;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown comparator '" + std::string(s) + "'");
}

ComparatorMap default_comparators() {
  return {
      {"pk_parameter", Comparator::kLevenshtein},
      {"pk_parameter_unit", Comparator::kLevenshtein},
      {"pk_parameter_value", Comparator::kLevenshtein},
      {"drug_dosage", Comparator::kLevenshtein},
      {"animal", Comparator::kCosine},
      {"drug", Comparator::kCosine},
      {"route_of_administration", Comparator::kCosine},
      {"animal_matrix/commodity", Comparator::kCosine},
      {"animal_matrix_commodity", Comparator::kCosine},
  };
}

std::string clean_cell(std::string_view s) {
  std::string out = text::collapse_whitespace(text::to_lower(s));
  if (out.size() >= 2 && ((out.front() == '"' && out.back() == '"') ||
                          (out.front() == '\'' && out.back() == '\''))) {
    out = text::collapse_whitespace(std::string_view(out).substr(1, out.size() - 2));
  }
  return out;
}

std::vector<ScoredPair> greedy_assign(
    const std::vector<std::vector<double>>& scores, double threshold,
    bool strict) {
  std::vector<ScoredPair> pairs;
  std::size_t gen_count = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    gen_count = std::max(gen_count, scores[i].size());
    for (std::size_t j = 0; j < scores[i].size(); ++j) {
      const double s = scores[i][j];
      if (strict ? s > threshold : s >= threshold) pairs.push_back({i, j, s});
    }
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const ScoredPair& a, const ScoredPair& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.gt != b.gt) return a.gt < b.gt;
              return a.gen < b.gen;
            });
  std::vector<bool> gt_used(scores.size()), gen_used(gen_count);
  std::vector<ScoredPair> chosen;
  for (const auto& p : pairs) {
    if (gt_used[p.gt] || gen_used[p.gen]) continue;
    gt_used[p.gt] = gen_used[p.gen] = true;
    chosen.push_back(p);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.gt < b.gt; });
  return chosen;
}

void align_columns(const NormalizedTable& gen, const NormalizedTable& gt,
                   double delta, AlignmentResult& result) {
  std::vector<std::vector<double>> scores(
      gt.header.size(), std::vector<double>(gen.header.size()));
  for (std::size_t i = 0; i < gt.header.size(); ++i) {
    const auto a = clean_cell(gt.header[i]);
    for (std::size_t j = 0; j < gen.header.size(); ++j) {
      scores[i][j] = levenshtein_similarity(a, clean_cell(gen.header[j]));
    }
  }
  result.column_map.clear();
  result.missing_cols.clear();
  result.extra_cols.clear();
  for (const auto& p : greedy_assign(scores, delta, false)) {
    result.column_map[p.gen] = p.gt;
  }
  std::vector<bool> gt_mapped(gt.header.size());
  for (const auto& [g, t] : result.column_map) gt_mapped[t] = true;
  for (std::size_t i = 0; i < gt.header.size(); ++i) {
    if (!gt_mapped[i]) result.missing_cols.push_back(i);
  }
  for (std::size_t j = 0; j < gen.header.size(); ++j) {
    if (!result.column_map.count(j)) result.extra_cols.push_back(j);
  }
}

double row_score(const NormalizedTable& gen, const NormalizedTable& gt,
                 const std::map<std::size_t, std::size_t>& gt_to_gen_col,
                 std::size_t gt_row, std::size_t gen_row) {
  double sum = 0.0;
  std::size_t compared = 0;
  for (std::size_t c = 0; c < gt.header.size(); ++c) {
    const auto a = clean_cell(cell_at(gt, gt_row, c));
    std::string b;
    if (auto it = gt_to_gen_col.find(c); it != gt_to_gen_col.end()) {
      b = clean_cell(cell_at(gen, gen_row, it->second));
    }
    if (a.empty() && b.empty()) continue;
    sum += token_overlap(a, b);
    ++compared;
  }
  return compared == 0 ? 1.0 : sum / static_cast<double>(compared);
}

void align_rows(const NormalizedTable& gen, const NormalizedTable& gt,
                double theta, AlignmentResult& result) {
  std::map<std::size_t, std::size_t> gt_to_gen_col;
  for (const auto& [g, t] : result.column_map) gt_to_gen_col[t] = g;
  std::vector<std::vector<double>> scores(gt.rows.size(),
                                          std::vector<double>(gen.rows.size()));
  for (std::size_t i = 0; i < gt.rows.size(); ++i) {
    for (std::size_t j = 0; j < gen.rows.size(); ++j) {
      scores[i][j] = row_score(gen, gt, gt_to_gen_col, i, j);
    }
  }
  result.row_map.clear();
  result.missing_rows.clear();
  result.extra_rows.clear();
  for (const auto& p : greedy_assign(scores, theta, true)) {
    result.row_map[p.gt] = p.gen;
  }
  std::vector<bool> gen_mapped(gen.rows.size());
  for (const auto& [t, g] : result.row_map) gen_mapped[g] = true;
  for (std::size_t i = 0; i < gt.rows.size(); ++i) {
    if (!result.row_map.count(i)) result.missing_rows.push_back(i);
  }
  for (std::size_t j = 0; j < gen.rows.size(); ++j) {
    if (!gen_mapped[j]) result.extra_rows.push_back(j);
  }
}

AlignmentResult align(const NormalizedTable& gen, const NormalizedTable& gt,
                      const EvalThresholds& thresholds) {
  AlignmentResult result;
  align_columns(gen, gt, thresholds.delta, result);
  align_rows(gen, gt, thresholds.theta, result);
  return result;
}

CellCounts& CellCounts::operator+=(const CellCounts& o) {
  tp += o.tp;
  fp_mismatch += o.fp_mismatch;
  fp_extra += o.fp_extra;
  fn += o.fn;
  generated_cells += o.generated_cells;
  extra_row_cells += o.extra_row_cells;
  return *this;
}

CellCounts compare_cells(const NormalizedTable& gen, const NormalizedTable& gt,
                         const AlignmentResult& alignment, double kappa,
                         EmbeddingProvider& embed,
                         const ComparatorMap& comparators) {
  std::map<std::size_t, std::size_t> gt_to_gen_col;
  for (const auto& [g, t] : alignment.column_map) gt_to_gen_col[t] = g;

  CellCounts counts;
  for (std::size_t c = 0; c < gt.header.size(); ++c) {
    Comparator comparator = Comparator::kLevenshtein;
    if (auto it = comparators.find(clean_cell(gt.header[c]));
        it != comparators.end()) {
      comparator = it->second;
    }
    const auto col_it = gt_to_gen_col.find(c);
    for (std::size_t r = 0; r < gt.rows.size(); ++r) {
      const auto want = clean_cell(cell_at(gt, r, c));
      if (want.empty()) continue;
      std::string got;
      const auto row_it = alignment.row_map.find(r);
      if (col_it != gt_to_gen_col.end() && row_it != alignment.row_map.end()) {
        got = clean_cell(cell_at(gen, row_it->second, col_it->second));
      }
      if (got.empty()) {
        ++counts.fn;
        continue;
      }
      double score = 1.0;
      if (got != want) {
        score = comparator == Comparator::kCosine
                    ? cosine_similarity(embed.embed(want), embed.embed(got))
                    : levenshtein_similarity(want, got);
      }
      if (score >= kappa) {
        ++counts.tp;
      } else {
        ++counts.fp_mismatch;
      }
    }
  }

  const std::size_t gen_cols = gen.header.size();
  const std::size_t gen_rows = gen.rows.size();
  const std::size_t extra_rows = alignment.extra_rows.size();
  counts.generated_cells = gen_rows * gen_cols;
  counts.extra_row_cells = extra_rows * gen_cols;
  counts.fp_extra = extra_rows * gen_cols +
                    alignment.extra_cols.size() * (gen_rows - extra_rows);
  return counts;
}

Metrics compute_metrics(const CellCounts& counts) {
  Metrics m;
  m.counts = counts;
  m.precision = ratio(counts.tp, counts.tp + counts.fp());
  m.recall = ratio(counts.tp, counts.tp + counts.fn);
  m.f1 = m.precision + m.recall == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.hallucination_rate = ratio(counts.extra_row_cells, counts.generated_cells);
  return m;
}

nlohmann::ordered_json to_json(const Metrics& m) {
  nlohmann::ordered_json doc;
  doc["tp"] = m.counts.tp;
  doc["fp"] = m.counts.fp();
  doc["fn"] = m.counts.fn;
  doc["fp_mismatch"] = m.counts.fp_mismatch;
  doc["fp_extra"] = m.counts.fp_extra;
  doc["generated_cells"] = m.counts.generated_cells;
  doc["extra_row_cells"] = m.counts.extra_row_cells;
  doc["precision"] = m.precision;
  doc["recall"] = m.recall;
  doc["f1"] = m.f1;
  doc["hallucination_rate"] = m.hallucination_rate;
  return doc;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["total"] = to_json(report.total);
  auto tables = nlohmann::ordered_json::array();
  for (const auto& t : report.per_table) {
    nlohmann::ordered_json entry;
    entry["table_id"] = t.table_id;
    entry["metrics"] = to_json(t.metrics);
    tables.push_back(std::move(entry));
  }
  doc["per_table"] = std::move(tables);
  return doc;
}

std::string per_table_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "table_id,tp,fp,fn,precision,recall,f1,hallucination_rate\n";
  auto line = [&](const std::string& id, const Metrics& m) {
    out << id << ',' << m.counts.tp << ',' << m.counts.fp() << ','
        << m.counts.fn << ',' << m.precision << ',' << m.recall << ','
        << m.f1 << ',' << m.hallucination_rate << '\n';
  };
  for (const auto& t : report.per_table) line(t.table_id, t.metrics);
  line("TOTAL", report.total);
  return out.str();
}

Metrics evaluate_table(const NormalizedTable& gen, const NormalizedTable& gt,
                       const EvalThresholds& thresholds,
                       EmbeddingProvider& embed,
                       const ComparatorMap& comparators) {
  validate(thresholds);
  const auto alignment = align(gen, gt, thresholds);
  return compute_metrics(
      compare_cells(gen, gt, alignment, thresholds.kappa, embed, comparators));
}

EvalReport evaluate_corpus(const std::map<std::string, NormalizedTable>& predicted,
                           const std::map<std::string, NormalizedTable>& gold,
                           const EvalThresholds& thresholds,
                           EmbeddingProvider& embed,
                           const ComparatorMap& comparators) {
  validate(thresholds);
  EvalReport report;
  CellCounts total;
  for (const auto& [id, gt] : gold) {
    NormalizedTable gen;
    if (auto it = predicted.find(id); it != predicted.end()) gen = it->second;
    const auto alignment = align(gen, gt, thresholds);
    const auto counts =
        compare_cells(gen, gt, alignment, thresholds.kappa, embed, comparators);
    total += counts;
    report.per_table.push_back({id, compute_metrics(counts)});
  }
  for (const auto& [id, gen] : predicted) {
    if (!gold.count(id)) spdlog::warn("no gold table for '{}', skipped", id);
  }
  report.total = compute_metrics(total);
  return report;
}

EvalReport eval_pipeline1(
    const std::map<std::string, std::set<std::string>>& predicted,
    const std::map<std::string, std::set<std::string>>& gold) {
  EvalReport report;
  CellCounts total;
  static const std::set<std::string> kEmpty;
  for (const auto& [id, want] : gold) {
    const auto it = predicted.find(id);
    const auto& got = it == predicted.end() ? kEmpty : it->second;
    CellCounts c;
    for (const auto& v : got) {
      if (want.count(v)) {
        ++c.tp;
      } else {
        ++c.fp_mismatch;
      }
    }
    for (const auto& v : want) {
      if (!got.count(v)) ++c.fn;
    }
    total += c;
    report.per_table.push_back({id, compute_metrics(c)});
  }
  for (const auto& [id, got] : predicted) {
    if (!gold.count(id)) {
      spdlog::warn("{}", Error(ErrorCode::kMissingGold,
                               "no gold variants for '" + id + "', skipped")
                             .what());
    }
  }
  report.total = compute_metrics(total);
  return report;
}

std::vector<GoldEntry> load_gold_dir(const std::filesystem::path& dir,
                                     const std::string& parameter) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<GoldEntry> entries;
  for (const auto& path : files) {
    GoldEntry g;
    try {
      const auto doc = nlohmann::json::parse(read_file(path));
      g.table_id = doc.at("table_id").get<std::string>();
      g.parameter = doc.value("parameter", std::string());
      for (const auto& v : doc.value("gold_variants", nlohmann::json::array())) {
        g.gold_variants.insert(v.get<std::string>());
      }
      if (doc.contains("gold_table") && !doc.at("gold_table").is_null()) {
        g.gold_table = path.parent_path() / doc.at("gold_table").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
    }
    if (!parameter.empty() && g.parameter != parameter) continue;
    entries.push_back(std::move(g));
  }
  return entries;
}

std::map<std::string, std::set<std::string>> gold_variant_sets(
    const std::vector<GoldEntry>& entries) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& g : entries) {
    out[g.table_id].insert(g.gold_variants.begin(), g.gold_variants.end());
  }
  return out;
}

}  // namespace autopk
