#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "autopk/embedding.hpp"
#include "autopk/error.hpp"
#include "autopk/evaluation.hpp"
#include "autopk/pk_record.hpp"
#include "autopk/sweep.hpp"
#include "oracles.hpp"

using namespace autopk;
namespace fs = std::filesystem;

namespace {

NormalizedTable pk_table(csv::Grid rows) { return {pk_header(), std::move(rows), "t"}; }

csv::Grid sample_rows() {
  return {{"t1/2", "h", "2.5", "chicken", "enrofloxacin", "10 mg/kg", "intravenous", "plasma"},
          {"t1/2", "h", "3.1", "chicken", "enrofloxacin", "10 mg/kg", "oral", "plasma"},
          {"cmax", "ug/ml", "1.2", "chicken", "enrofloxacin", "10 mg/kg", "oral", "plasma"}};
}

std::size_t non_empty_cells(const NormalizedTable& t) {
  std::size_t n = 0;
  for (const auto& r : t.rows) {
    for (const auto& c : r) n += !clean_cell(c).empty();
  }
  return n;
}

// Random edit of a gold table: reorder rows and columns, drop or corrupt
// cells, add rows.
NormalizedTable perturb(const NormalizedTable& gt, std::mt19937& rng) {
  NormalizedTable gen = gt;
  std::bernoulli_distribution coin(0.15);
  for (auto& r : gen.rows) {
    for (auto& c : r) {
      if (coin(rng)) c = coin(rng) ? "" : oracle::random_word(rng, "xyz", 1, 5);
    }
  }
  if (coin(rng) && !gen.rows.empty()) gen.rows.erase(gen.rows.begin());
  std::uniform_int_distribution<int> extra(0, 2);
  for (int k = extra(rng); k > 0; --k) {
    csv::Row r;
    for (std::size_t c = 0; c < gen.header.size(); ++c) r.push_back(oracle::random_word(rng, "pq", 1, 3));
    gen.rows.push_back(r);
  }
  std::shuffle(gen.rows.begin(), gen.rows.end(), rng);
  std::vector<std::size_t> perm(gen.header.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  NormalizedTable out{{}, csv::Grid(gen.rows.size()), gen.provenance_id};
  for (auto p : perm) {
    out.header.push_back(gen.header[p]);
    for (std::size_t r = 0; r < gen.rows.size(); ++r) out.rows[r].push_back(gen.rows[r][p]);
  }
  return out;
}

std::vector<std::vector<double>> distinct_scores(std::mt19937& rng, std::size_t n, std::size_t m) {
  std::vector<double> pool(n * m);
  std::iota(pool.begin(), pool.end(), 1.0);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::vector<double>> s(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) s[i][j] = pool[i * m + j] / static_cast<double>(n * m + 1);
  }
  return s;
}

}  // namespace

TEST(Eval, SelfComparisonIsPerfect) {
  HashedNgramEmbedder embed;
  std::mt19937 rng(30);
  for (int i = 0; i < 100; ++i) {
    auto gt = oracle::random_table(rng, "abcd ", 6, 6, 0.2);
    if (non_empty_cells(gt) == 0) continue;
    const auto m = evaluate_table(gt, gt, {}, embed);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
    EXPECT_DOUBLE_EQ(m.hallucination_rate, 0.0);
  }
  const auto m = evaluate_table(pk_table(sample_rows()), pk_table(sample_rows()), {}, embed);
  EXPECT_EQ(m.counts.tp, 24u);
}

TEST(Eval, ExtraRowCostsOneFalsePositivePerGeneratedColumn) {
  HashedNgramEmbedder embed;
  auto rows = sample_rows();
  rows.push_back({"auc", "ug*h/ml", "40", "dog", "ceftiofur", "2 mg/kg", "oral", "serum"});
  const auto m = evaluate_table(pk_table(rows), pk_table(sample_rows()), {}, embed);
  EXPECT_EQ(m.counts.tp, 24u);
  EXPECT_EQ(m.counts.fp(), 8u);
  EXPECT_NEAR(m.hallucination_rate, 0.25, 1e-12);
}

TEST(Eval, HalfExtraRowsGivesHalfHallucination) {
  HashedNgramEmbedder embed;
  auto rows = sample_rows();
  for (int k = 0; k < 3; ++k) {
    rows.push_back({"zz" + std::to_string(k), "qq", "99", "horse", "x", "y", "z", "w"});
  }
  const auto m = evaluate_table(pk_table(rows), pk_table(sample_rows()), {}, embed);
  EXPECT_NEAR(m.hallucination_rate, 0.5, 1e-12);
}

TEST(Eval, MetricsFromCounts) {
  CellCounts c;
  c.tp = 9;
  c.fp_mismatch = 1;
  c.fn = 1;
  const auto m = compute_metrics(c);
  EXPECT_NEAR(m.precision, 0.9, 1e-12);
  EXPECT_NEAR(m.recall, 0.9, 1e-12);
  EXPECT_NEAR(m.f1, 0.9, 1e-12);
  const auto zero = compute_metrics({});
  EXPECT_EQ(zero.precision, 0.0);
  EXPECT_EQ(zero.recall, 0.0);
  EXPECT_EQ(zero.f1, 0.0);
  EXPECT_EQ(zero.hallucination_rate, 0.0);
}

TEST(Eval, ColumnsMatchByHeaderSimilarity) {
  HashedNgramEmbedder embed;
  NormalizedTable gt{{"Parameter", "Value"}, {{"t1/2", "2"}}, "t"};
  NormalizedTable gen{{"value", "parameters", "notes"}, {{"2", "t1/2", "x"}}, "t"};
  const auto a = align(gen, gt, {});
  EXPECT_EQ(a.column_map, (std::map<std::size_t, std::size_t>{{0, 1}, {1, 0}}));
  EXPECT_EQ(a.extra_cols, (std::vector<std::size_t>{2}));
  const auto m = evaluate_table(gen, gt, {}, embed);
  EXPECT_EQ(m.counts.tp, 2u);
  EXPECT_EQ(m.counts.fp_extra, 1u);
}

TEST(Eval, CleanCell) {
  EXPECT_EQ(clean_cell("  \"Half  Life\" "), "half life");
  EXPECT_EQ(clean_cell("'x'"), "x");
  EXPECT_EQ(clean_cell("\"\"a\"\""), "\"a\"");
}

TEST(Eval, ThresholdValidation) {
  EXPECT_NO_THROW(validate(EvalThresholds{}));
  EXPECT_THROW(validate(EvalThresholds{1.5, 0.5, 0.8}), Error);
  EXPECT_THROW(validate(EvalThresholds{0.75, -0.1, 0.8}), Error);
}

TEST(Eval, CountConservationOnPerturbedPairs) {
  HashedNgramEmbedder embed;
  std::mt19937 rng(31);
  for (int i = 0; i < 500; ++i) {
    const auto gt = oracle::random_table(rng, "abcde ", 5, 5, 0.2);
    const auto gen = perturb(gt, rng);
    const auto a = align(gen, gt, {});
    const auto c = compare_cells(gen, gt, a, 0.8, embed);
    ASSERT_EQ(c.tp + c.fp_mismatch + c.fn, non_empty_cells(gt));
    EXPECT_EQ(c.generated_cells, gen.rows.size() * gen.header.size());
    EXPECT_EQ(a.row_map.size() + a.missing_rows.size(), gt.rows.size());
    EXPECT_EQ(a.row_map.size() + a.extra_rows.size(), gen.rows.size());
  }
}

TEST(Eval, PermutingRowsAndColumnsDoesNotChangeScores) {
  HashedNgramEmbedder embed;
  std::mt19937 rng(32);
  for (int i = 0; i < 200; ++i) {
    auto gt = oracle::random_table(rng, "abcdefgh", 5, 5, 0.1);
    // distinct headers and rows keep alignment unambiguous
    for (std::size_t c = 0; c < gt.header.size(); ++c) gt.header[c] = "col" + std::to_string(c) + "x";
    for (std::size_t r = 0; r < gt.rows.size(); ++r) gt.rows[r][0] = "id" + std::to_string(r);
    NormalizedTable shuffled = gt;
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
    const auto m = evaluate_table(shuffled, gt, {}, embed);
    EXPECT_DOUBLE_EQ(m.f1, non_empty_cells(gt) ? 1.0 : 0.0);
  }
}

TEST(Greedy, EqualsExhaustiveOnDistinctScores) {
  std::mt19937 rng(33);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::uniform_real_distribution<double> thr(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto s = distinct_scores(rng, dim(rng), dim(rng));
    const double t = thr(rng);
    const bool strict = i % 2 == 0;
    const auto accept = [&](double v) { return strict ? v > t : v >= t; };
    const auto want = oracle::best_assignment(s, accept);
    std::vector<int> got(s.size(), -1);
    for (const auto& p : greedy_assign(s, t, strict)) got[p.gt] = static_cast<int>(p.gen);
    ASSERT_EQ(got, want);
  }
}

TEST(Greedy, RowAlignmentMatchesExhaustiveOnSmallTables) {
  std::mt19937 rng(34);
  int checked = 0;
  for (int i = 0; i < 3000 && checked < 500; ++i) {
    const auto gt = oracle::random_table(rng, "abc ", 4, 3, 0.1);
    auto gen = perturb(gt, rng);
    if (gen.rows.size() > 4 || gt.rows.empty() || gen.rows.empty()) continue;
    AlignmentResult a;
    align_columns(gen, gt, 0.75, a);
    std::map<std::size_t, std::size_t> gt_to_gen;
    for (const auto& [g, t] : a.column_map) gt_to_gen[t] = g;
    std::vector<std::vector<double>> s(gt.rows.size(), std::vector<double>(gen.rows.size()));
    std::set<double> seen;
    bool distinct = true;
    for (std::size_t r = 0; r < gt.rows.size(); ++r) {
      for (std::size_t g = 0; g < gen.rows.size(); ++g) {
        s[r][g] = row_score(gen, gt, gt_to_gen, r, g);
        distinct &= seen.insert(s[r][g]).second;
      }
    }
    if (!distinct) continue;
    align_rows(gen, gt, 0.5, a);
    const auto want = oracle::best_assignment(s, [](double v) { return v > 0.5; });
    for (std::size_t r = 0; r < want.size(); ++r) {
      if (want[r] < 0) {
        EXPECT_FALSE(a.row_map.count(r));
      } else {
        EXPECT_EQ(a.row_map.at(r), static_cast<std::size_t>(want[r]));
      }
    }
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Eval, RowScoreSkipsColumnsEmptyOnBothSides) {
  NormalizedTable gt{{"a", "b", "c"}, {{"x y", "", ""}}, "t"};
  NormalizedTable gen{{"a", "b", "c"}, {{"x", "", "z"}}, "t"};
  const std::map<std::size_t, std::size_t> cols{{0, 0}, {1, 1}, {2, 2}};
  // dice("x y","x") = 2/3, column b skipped, column c = 0
  EXPECT_NEAR(row_score(gen, gt, cols, 0, 0), (2.0 / 3.0) / 2.0, 1e-12);
  NormalizedTable blank{{"a"}, {{""}}, "t"};
  EXPECT_EQ(row_score(blank, blank, {{0, 0}}, 0, 0), 1.0);
}

TEST(Eval, ComparatorsPerColumn) {
  const auto m = default_comparators();
  EXPECT_EQ(m.at("animal"), Comparator::kCosine);
  EXPECT_EQ(m.at("pk_parameter_value"), Comparator::kLevenshtein);
  EXPECT_EQ(comparator_from_string("cosine"), Comparator::kCosine);
}

TEST(Eval, CorpusReportAndMissingPrediction) {
  HashedNgramEmbedder embed;
  std::map<std::string, NormalizedTable> gold{{"a", pk_table(sample_rows())},
                                              {"b", pk_table(sample_rows())}};
  std::map<std::string, NormalizedTable> pred{{"a", pk_table(sample_rows())}};
  const auto r = evaluate_corpus(pred, gold, {}, embed);
  ASSERT_EQ(r.per_table.size(), 2u);
  EXPECT_EQ(r.per_table[1].metrics.counts.fn, 24u);
  EXPECT_NEAR(r.total.recall, 0.5, 1e-12);
  EXPECT_NEAR(r.total.precision, 1.0, 1e-12);
  const auto csv_text = per_table_csv(r);
  EXPECT_NE(csv_text.find("TOTAL"), std::string::npos);
}

TEST(Pipeline1Eval, SetScoring) {
  const std::map<std::string, std::set<std::string>> gold{
      {"a", {"T1/2", "HL"}}, {"b", {}}, {"c", {"T1/2"}}};
  const std::map<std::string, std::set<std::string>> pred{
      {"a", {"T1/2", "Shelf-life"}}, {"b", {}}, {"x", {"T1/2"}}};
  const auto r = eval_pipeline1(pred, gold);
  EXPECT_EQ(r.total.counts.tp, 1u);
  EXPECT_EQ(r.total.counts.fp(), 1u);
  EXPECT_EQ(r.total.counts.fn, 2u);
  EXPECT_NEAR(r.total.precision, 0.5, 1e-12);
  EXPECT_NEAR(r.total.recall, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.per_table.size(), 3u);
  EXPECT_DOUBLE_EQ(eval_pipeline1(gold, gold).total.f1, 1.0);
}

TEST(Gold, LoadsShippedCorpus) {
  const auto entries = load_gold_dir(fs::path(AUTOPK_SOURCE_DIR) / "corpus/synthetic/gold", "half_life");
  ASSERT_EQ(entries.size(), 10u);
  EXPECT_EQ(entries[0].table_id, "t01_chicken");
  ASSERT_TRUE(entries[0].gold_table.has_value());
  EXPECT_TRUE(fs::exists(*entries[0].gold_table));
  EXPECT_TRUE(gold_variant_sets(entries).at("t07_formulation").empty());
  EXPECT_TRUE(load_gold_dir(fs::path(AUTOPK_SOURCE_DIR) / "corpus/synthetic/gold", "cmax").empty());
}

TEST(Sweep, GridAndRanking) {
  EXPECT_EQ(simplex_grid(0.1, {0.69}).size(), 66u);
  EXPECT_EQ(simplex_grid(0.5, {0.6, 0.9}).size(), 12u);
  EXPECT_THROW(simplex_grid(0.0, {0.5}), Error);
  EXPECT_THROW(simplex_grid(0.5, {}), Error);
  for (const auto& w : simplex_grid(0.25, {0.5})) EXPECT_NO_THROW(validate(w));

  HashedNgramEmbedder embed;
  const std::vector<NormalizedTable> corpus{
      {{"Parameter"}, {{"Half-life"}}, "a"},
      {{"Parameter"}, {{"Half-life (h)"}, {"Clearance"}}, "b"}};
  SweepTask task;
  task.seeds = VariantRegistry(PkParameter{"half_life", "half-life", {}, {}});
  task.seeds.add({"Half-life", VariantProvenance::kSeed, 1.0, "a"}, "seeded");
  task.gold = {{"a", {"Half-life"}}, {"b", {"Half-life (h)"}}};
  task.validator = [](const std::string& c, const VariantRegistry&) {
    return c == "Half-life (h)" ? Verdict::kYes : Verdict::kNo;
  };
  const auto grid = simplex_grid(0.5, {0.5, 0.99});
  const auto rows = sweep(corpus, {task}, grid, {}, embed, 3);
  ASSERT_EQ(rows.size(), grid.size());
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i - 1].mean_f1, rows[i].mean_f1);
  EXPECT_DOUBLE_EQ(rows.front().mean_f1, 1.0);
  EXPECT_LT(rows.back().mean_f1, 1.0);  // tau 0.99 never admits the near miss
  const auto text = sweep_csv(rows, {"half_life"});
  EXPECT_EQ(text.substr(0, text.find('\n')), "alpha,beta,gamma,tau,mean_f1,f1_half_life");
}
