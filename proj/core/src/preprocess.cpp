#include "autopk/preprocess.hpp"

#include "autopk/error.hpp"
#include "autopk/text.hpp"

namespace autopk {
namespace {

bool blank(const std::string& s) { return text::trim(s).empty(); }

}  // namespace

HeaderJoinOrder header_join_order_from_string(std::string_view s) {
  if (s == "top_down") return HeaderJoinOrder::kTopDown;
  if (s == "bottom_up") return HeaderJoinOrder::kBottomUp;
  throw Error(ErrorCode::kInvalidConfig,
              "header_join_order must be top_down or bottom_up, got '" +
                  std::string(s) + "'");
}

std::string_view to_string(HeaderJoinOrder order) {
  return order == HeaderJoinOrder::kTopDown ? "top_down" : "bottom_up";
}

RawTable pad_rows(RawTable raw) {
  const std::size_t width = raw.width();
  for (auto& row : raw.grid) row.resize(width);
  return raw;
}

RawTable expand_merged(RawTable raw) {
  validate(raw);
  raw = pad_rows(std::move(raw));
  for (const auto& span : raw.merged_spans) {
    const std::string anchor = raw.grid[span.row][span.col];
    for (std::size_t r = span.row; r < span.row + span.row_span; ++r) {
      for (std::size_t c = span.col; c < span.col + span.col_span; ++c) {
        raw.grid[r][c] = anchor;
      }
    }
  }
  raw.merged_spans.clear();
  return raw;
}

RawTable fill_empty_headers(RawTable raw) {
  const std::size_t headers = std::min(raw.header_row_count, raw.grid.size());
  for (std::size_t r = 0; r < headers; ++r) {
    auto& row = raw.grid[r];
    const csv::Row original = row;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!blank(original[c])) continue;
      bool filled = false;
      for (std::size_t k = c; k-- > 0;) {
        if (!blank(original[k])) {
          row[c] = original[k];
          filled = true;
          break;
        }
      }
      for (std::size_t k = c + 1; !filled && k < row.size(); ++k) {
        if (!blank(original[k])) {
          row[c] = original[k];
          filled = true;
        }
      }
    }
  }
  return raw;
}

NormalizedTable collapse_headers(const RawTable& raw,
                                 const PreprocessOptions& options) {
  if (raw.header_row_count == 0) {
    throw Error(ErrorCode::kMalformedInput,
                "table '" + raw.id + "' has no header rows to collapse");
  }
  validate(raw);
  const std::size_t width = raw.width();
  const std::size_t headers = raw.header_row_count;

  NormalizedTable out;
  out.provenance_id = raw.id;
  out.header.reserve(width);
  for (std::size_t c = 0; c < width; ++c) {
    std::vector<std::string> fragments;
    for (std::size_t i = 0; i < headers; ++i) {
      const std::size_t r = options.join_order == HeaderJoinOrder::kTopDown
                                ? i
                                : headers - 1 - i;
      const auto& row = raw.grid[r];
      if (c >= row.size()) continue;
      std::string fragment(text::trim(row[c]));
      if (fragment.empty()) continue;
      if (!fragments.empty() && fragments.back() == fragment) continue;
      fragments.push_back(std::move(fragment));
    }
    out.header.push_back(text::join(fragments, "^"));
  }
  for (std::size_t r = headers; r < raw.grid.size(); ++r) {
    csv::Row row = raw.grid[r];
    row.resize(width);
    out.rows.push_back(std::move(row));
  }
  return out;
}

NormalizedTable preprocess(RawTable raw, const PreprocessOptions& options) {
  raw = pad_rows(std::move(raw));
  raw = expand_merged(std::move(raw));
  raw = fill_empty_headers(std::move(raw));
  return collapse_headers(raw, options);
}

RawTable to_raw(const NormalizedTable& table) {
  RawTable raw;
  raw.id = table.provenance_id;
  raw.header_row_count = 1;
  raw.grid.reserve(table.rows.size() + 1);
  raw.grid.push_back(table.header);
  for (const auto& row : table.rows) raw.grid.push_back(row);
  return raw;
}

}  // namespace autopk
