#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autopk/csv.hpp"

namespace autopk {

// A merged region anchored at (row, col); the anchor holds the content.
struct MergedSpan {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t row_span = 1;
  std::size_t col_span = 1;

  bool operator==(const MergedSpan&) const = default;
};

// Table as ingested: possibly ragged, with the header rows still separate.
struct RawTable {
  std::string id;
  csv::Grid grid;
  std::size_t header_row_count = 1;
  std::vector<MergedSpan> merged_spans;
  std::optional<std::string> caption;
  std::optional<std::string> footnote;
  std::optional<std::string> article_title;
  std::optional<std::string> article_abstract;

  std::size_t width() const;  // widest row
  bool operator==(const RawTable&) const = default;
};

// Throws Error(kMalformedInput) when header_row_count exceeds the row count
// or a merged span leaves the grid.
void validate(const RawTable& table);

// Rectangular table with one composite ("^"-joined) header row.
struct NormalizedTable {
  std::vector<std::string> header;
  csv::Grid rows;
  std::string provenance_id;

  std::size_t column_count() const { return header.size(); }
  std::size_t row_count() const { return rows.size(); }
  bool operator==(const NormalizedTable&) const = default;
};

// Throws Error(kMalformedInput) unless every row has header.size() cells.
void validate(const NormalizedTable& table);

enum class CellAxis { kBody, kHeader };

// Location of a matched cell. For kHeader, `row` is the index of the
// caret-separated fragment inside the composite header at `col`.
struct CellRef {
  std::size_t row = 0;
  std::size_t col = 0;
  CellAxis axis = CellAxis::kBody;

  bool operator==(const CellRef&) const = default;
  auto operator<=>(const CellRef&) const = default;
};

std::string_view to_string(CellAxis axis);
CellAxis cell_axis_from_string(std::string_view s);

enum class TableFormat { kCsvWithSidecar, kJson };

// Reads `<id>.csv` (+ optional `<id>.meta.json`) or a single `<id>.json`.
// The table id defaults to the file stem.
RawTable parse_table_file(const std::filesystem::path& path, TableFormat format);

// Picks the format from the extension (.csv or .json).
RawTable parse_table_file(const std::filesystem::path& path);

// Parses format B from an in-memory JSON document.
RawTable parse_table_json(std::string_view json_text, std::string default_id);

// Writes the sidecar metadata document for `table` (format A).
std::string sidecar_json(const RawTable& table);

// Header first, RFC 4180 quoting, "\n" line breaks, no trailing newline.
std::string serialize_csv(const NormalizedTable& table);

// Reads a CSV whose first row is the header. Short rows are right-padded;
// rows longer than the header extend the header with empty names.
NormalizedTable normalized_from_csv(std::string_view text, std::string id);

// Transposes the full grid (header row included): the first column becomes
// the header and the header becomes the first column.
NormalizedTable transpose(const NormalizedTable& table);

}  // namespace autopk
