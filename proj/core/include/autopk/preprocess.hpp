#pragma once

#include "autopk/table.hpp"

namespace autopk {

// Order in which stacked header cells are joined into one composite header.
// kTopDown yields "Chicken^Dosage"; kBottomUp yields "Dosage^Chicken".
enum class HeaderJoinOrder { kTopDown, kBottomUp };

HeaderJoinOrder header_join_order_from_string(std::string_view s);
std::string_view to_string(HeaderJoinOrder order);

struct PreprocessOptions {
  HeaderJoinOrder join_order = HeaderJoinOrder::kTopDown;
};

// Right-pads ragged rows with empty cells to the widest row.
RawTable pad_rows(RawTable raw);

// Copies each span's anchor content into every covered cell and clears
// merged_spans.
RawTable expand_merged(RawTable raw);

// In every header row, an empty cell takes the nearest non-empty value to its
// left, or to its right when nothing is on the left. Body rows are untouched.
RawTable fill_empty_headers(RawTable raw);

// Joins the header rows of each column with '^', skipping empty fragments and
// collapsing consecutive duplicates. Throws kMalformedInput when the table has
// no header row.
NormalizedTable collapse_headers(const RawTable& raw,
                                 const PreprocessOptions& options = {});

// pad_rows -> expand_merged -> fill_empty_headers -> collapse_headers.
NormalizedTable preprocess(RawTable raw, const PreprocessOptions& options = {});

// Wraps a normalized table as a single-header-row RawTable.
RawTable to_raw(const NormalizedTable& table);

}  // namespace autopk
