#include "autopk/table.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "autopk/error.hpp"

namespace autopk {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMalformedInput, "cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::optional<std::string> optional_string(const nlohmann::json& doc,
                                           const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedInput,
                std::string("metadata key '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

void apply_metadata(const nlohmann::json& doc, RawTable& table) {
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedInput, "table metadata must be an object");
  }
  if (auto it = doc.find("header_row_count"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      throw Error(ErrorCode::kMalformedInput,
                  "header_row_count must be a non-negative integer");
    }
    table.header_row_count = it->get<std::size_t>();
  }
  if (auto it = doc.find("merged_spans"); it != doc.end()) {
    for (const auto& span : *it) {
      if (!span.is_array() || span.size() != 4) {
        throw Error(ErrorCode::kMalformedInput,
                    "merged span must be [row, col, row_span, col_span]");
      }
      for (const auto& v : span) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw Error(ErrorCode::kMalformedInput,
                      "merged span entries must be non-negative integers");
        }
      }
      table.merged_spans.push_back({span[0].get<std::size_t>(),
                                    span[1].get<std::size_t>(),
                                    span[2].get<std::size_t>(),
                                    span[3].get<std::size_t>()});
    }
  }
  table.caption = optional_string(doc, "caption");
  table.footnote = optional_string(doc, "footnote");
  table.article_title = optional_string(doc, "article_title");
  table.article_abstract = optional_string(doc, "article_abstract");
}

nlohmann::json parse_json(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedInput, what + ": " + e.what());
  }
}

}  // namespace

std::size_t RawTable::width() const {
  std::size_t w = 0;
  for (const auto& row : grid) w = std::max(w, row.size());
  return w;
}

void validate(const RawTable& table) {
  if (table.header_row_count > table.grid.size()) {
    throw Error(ErrorCode::kMalformedInput,
                "table '" + table.id + "' declares " +
                    std::to_string(table.header_row_count) +
                    " header rows but has " +
                    std::to_string(table.grid.size()) + " rows");
  }
  const std::size_t width = table.width();
  for (const auto& span : table.merged_spans) {
    if (span.row_span == 0 || span.col_span == 0 ||
        span.row + span.row_span > table.grid.size() ||
        span.col + span.col_span > width) {
      throw Error(ErrorCode::kMalformedInput,
                  "merged span out of bounds in table '" + table.id + "'");
    }
  }
}

void validate(const NormalizedTable& table) {
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw Error(ErrorCode::kMalformedInput,
                  "row " + std::to_string(r) + " of '" + table.provenance_id +
                      "' is not rectangular");
    }
  }
}

std::string_view to_string(CellAxis axis) {
  return axis == CellAxis::kHeader ? "header" : "body";
}

CellAxis cell_axis_from_string(std::string_view s) {
  if (s == "header") return CellAxis::kHeader;
  if (s == "body") return CellAxis::kBody;
  throw Error(ErrorCode::kMalformedInput, "unknown cell axis '" +
                                              std::string(s) + "'");
}

RawTable parse_table_file(const std::filesystem::path& path,
                          TableFormat format) {
  std::string id = path.stem().string();
  if (format == TableFormat::kJson) {
    return parse_table_json(read_file(path), std::move(id));
  }

  RawTable table;
  table.id = std::move(id);
  table.grid = csv::parse(read_file(path));

  auto sidecar = path;
  sidecar.replace_extension(".meta.json");
  if (std::filesystem::exists(sidecar)) {
    apply_metadata(parse_json(read_file(sidecar), sidecar.string()), table);
  }
  validate(table);
  return table;
}

RawTable parse_table_file(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json") return parse_table_file(path, TableFormat::kJson);
  if (ext == ".csv") return parse_table_file(path, TableFormat::kCsvWithSidecar);
  throw Error(ErrorCode::kMalformedInput,
              "unsupported table file extension: " + path.string());
}

RawTable parse_table_json(std::string_view json_text, std::string default_id) {
  const auto doc = parse_json(json_text, default_id);
  if (!doc.is_object()) {
    throw Error(ErrorCode::kMalformedInput, "table document must be an object");
  }
  RawTable table;
  table.id = doc.value("id", std::move(default_id));
  auto grid = doc.find("grid");
  if (grid == doc.end() || !grid->is_array()) {
    throw Error(ErrorCode::kMalformedInput,
                "table '" + table.id + "' has no grid array");
  }
  for (const auto& row : *grid) {
    if (!row.is_array()) {
      throw Error(ErrorCode::kMalformedInput, "grid rows must be arrays");
    }
    csv::Row cells;
    for (const auto& cell : row) {
      if (cell.is_string()) {
        cells.push_back(cell.get<std::string>());
      } else if (cell.is_null()) {
        cells.emplace_back();
      } else if (cell.is_number() || cell.is_boolean()) {
        cells.push_back(cell.dump());
      } else {
        throw Error(ErrorCode::kMalformedInput, "grid cells must be scalars");
      }
    }
    table.grid.push_back(std::move(cells));
  }
  apply_metadata(doc, table);
  validate(table);
  return table;
}

std::string sidecar_json(const RawTable& table) {
  nlohmann::ordered_json doc;
  doc["header_row_count"] = table.header_row_count;
  auto spans = nlohmann::ordered_json::array();
  for (const auto& s : table.merged_spans) {
    spans.push_back({s.row, s.col, s.row_span, s.col_span});
  }
  doc["merged_spans"] = std::move(spans);
  auto put = [&](const char* key, const std::optional<std::string>& value) {
    if (value) doc[key] = *value;
  };
  put("caption", table.caption);
  put("footnote", table.footnote);
  put("article_title", table.article_title);
  put("article_abstract", table.article_abstract);
  return doc.dump(2);
}

std::string serialize_csv(const NormalizedTable& table) {
  std::string out = csv::format_row(table.header);
  for (const auto& row : table.rows) {
    out.push_back('\n');
    out += csv::format_row(row);
  }
  return out;
}

NormalizedTable normalized_from_csv(std::string_view text, std::string id) {
  auto grid = csv::parse(text);
  NormalizedTable table;
  table.provenance_id = std::move(id);
  if (grid.empty()) return table;
  std::size_t width = 0;
  for (const auto& row : grid) width = std::max(width, row.size());
  for (auto& row : grid) row.resize(width);
  table.header = std::move(grid.front());
  table.rows.assign(std::make_move_iterator(grid.begin() + 1),
                    std::make_move_iterator(grid.end()));
  return table;
}

NormalizedTable transpose(const NormalizedTable& table) {
  const std::size_t height = table.rows.size() + 1;  // header included
  const std::size_t width = table.header.size();
  auto at = [&](std::size_t r, std::size_t c) -> const std::string& {
    return r == 0 ? table.header[c] : table.rows[r - 1][c];
  };

  NormalizedTable out;
  out.provenance_id = table.provenance_id;
  if (width == 0) return out;
  out.header.reserve(height);
  for (std::size_t r = 0; r < height; ++r) out.header.push_back(at(r, 0));
  out.rows.reserve(width - 1);
  for (std::size_t c = 1; c < width; ++c) {
    csv::Row row;
    row.reserve(height);
    for (std::size_t r = 0; r < height; ++r) row.push_back(at(r, c));
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace autopk
