#include <gtest/gtest.h>

#include <random>

#include "autopk/error.hpp"
#include "autopk/preprocess.hpp"
#include "autopk/text.hpp"
#include "oracles.hpp"

using namespace autopk;

namespace {

RawTable chicken_fragment() {
  RawTable raw;
  raw.id = "chicken";
  raw.grid = {{"Chicken", ""}, {"Dosage", "Parameter"}, {"50gr", "T1/2"}};
  raw.header_row_count = 2;
  raw.merged_spans = {{0, 0, 1, 2}};
  return raw;
}

}  // namespace

TEST(Preprocess, PadRowsToWidest) {
  RawTable raw;
  raw.grid = {{"a"}, {"b", "c", "d"}};
  const auto padded = pad_rows(raw);
  EXPECT_EQ(padded.grid[0], (csv::Row{"a", "", ""}));
}

TEST(Preprocess, ExpandMergedMatchesSpanFillOracle) {
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i) {
    const auto raw = oracle::random_raw(rng);
    auto expected = pad_rows(raw).grid;
    // Oracle: for every cell, the anchor of the last span covering it wins.
    const auto original = expected;
    for (std::size_t r = 0; r < expected.size(); ++r) {
      for (std::size_t c = 0; c < expected[r].size(); ++c) {
        for (const auto& s : raw.merged_spans) {
          if (r >= s.row && r < s.row + s.row_span && c >= s.col &&
              c < s.col + s.col_span) {
            expected[r][c] = original[s.row][s.col];
          }
        }
      }
    }
    // Sequential copying may propagate an earlier span's anchor into a later
    // anchor; only compare when spans do not overlap.
    bool overlap = false;
    for (std::size_t a = 0; a < raw.merged_spans.size(); ++a) {
      for (std::size_t b = a + 1; b < raw.merged_spans.size(); ++b) {
        const auto& x = raw.merged_spans[a];
        const auto& y = raw.merged_spans[b];
        overlap |= x.row < y.row + y.row_span && y.row < x.row + x.row_span &&
                   x.col < y.col + y.col_span && y.col < x.col + x.col_span;
      }
    }
    const auto expanded = expand_merged(raw);
    EXPECT_TRUE(expanded.merged_spans.empty());
    if (!overlap) {
      EXPECT_EQ(expanded.grid, expected);
    }
  }
}

TEST(Preprocess, FillEmptyHeadersPrefersLeftThenRight) {
  RawTable raw;
  raw.grid = {{"", "A", "", " ", "B"}, {"x", "", "y", "", ""}, {"", "", "", "", ""}};
  raw.header_row_count = 2;
  const auto filled = fill_empty_headers(raw);
  EXPECT_EQ(filled.grid[0], (csv::Row{"A", "A", "A", "A", "B"}));
  EXPECT_EQ(filled.grid[1], (csv::Row{"x", "x", "y", "y", "y"}));
  EXPECT_EQ(filled.grid[2], raw.grid[2]);  // body untouched
}

TEST(Preprocess, FillMatchesOracleOnRandomTables) {
  std::mt19937 rng(5);
  for (int i = 0; i < 300; ++i) {
    const auto raw = pad_rows(oracle::random_raw(rng));
    const auto filled = fill_empty_headers(raw);
    for (std::size_t r = 0; r < raw.header_row_count; ++r) {
      const auto& row = raw.grid[r];
      for (std::size_t c = 0; c < row.size(); ++c) {
        std::string want = row[c];
        if (text::trim(want).empty()) {
          std::optional<std::string> pick;
          for (std::size_t k = 0; k < c; ++k) {
            if (!text::trim(row[k]).empty()) pick = row[k];
          }
          for (std::size_t k = c + 1; !pick && k < row.size(); ++k) {
            if (!text::trim(row[k]).empty()) pick = row[k];
          }
          if (pick) want = *pick;
        }
        EXPECT_EQ(filled.grid[r][c], want);
      }
    }
  }
}

TEST(Preprocess, CollapseJoinsWithCaretAndSkipsDuplicates) {
  RawTable raw;
  raw.grid = {{"Chicken", "Chicken", "Pig"}, {"Dosage", "Chicken", " "}, {"1", "2", "3"}};
  raw.header_row_count = 2;
  const auto t = collapse_headers(raw);
  EXPECT_EQ(t.header, (std::vector<std::string>{"Chicken^Dosage", "Chicken", "Pig"}));
  EXPECT_EQ(t.rows.size(), 1u);
}

TEST(Preprocess, JoinOrder) {
  auto t = preprocess(chicken_fragment());
  EXPECT_EQ(t.header, (std::vector<std::string>{"Chicken^Dosage", "Chicken^Parameter"}));
  t = preprocess(chicken_fragment(), {HeaderJoinOrder::kBottomUp});
  EXPECT_EQ(t.header, (std::vector<std::string>{"Dosage^Chicken", "Parameter^Chicken"}));
  EXPECT_EQ(t.rows, (csv::Grid{{"50gr", "T1/2"}}));
  EXPECT_EQ(header_join_order_from_string("bottom_up"), HeaderJoinOrder::kBottomUp);
  EXPECT_THROW(header_join_order_from_string("sideways"), Error);
}

TEST(Preprocess, NoHeaderRowsIsMalformed) {
  RawTable raw;
  raw.grid = {{"a"}};
  raw.header_row_count = 0;
  try {
    preprocess(raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedInput);
  }
}

TEST(Preprocess, OutputIsRectangular) {
  std::mt19937 rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto t = preprocess(oracle::random_raw(rng));
    EXPECT_NO_THROW(validate(t));
  }
}

TEST(Preprocess, Idempotent) {
  std::mt19937 rng(13);
  for (int i = 0; i < 500; ++i) {
    for (auto order : {HeaderJoinOrder::kTopDown, HeaderJoinOrder::kBottomUp}) {
      const auto once = preprocess(oracle::random_raw(rng), {order});
      EXPECT_EQ(preprocess(to_raw(once), {order}), once);
    }
  }
}
