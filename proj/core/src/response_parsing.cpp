#include "autopk/response_parsing.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "autopk/error.hpp"
#include "autopk/text.hpp"

namespace autopk {
namespace {

std::string header_key(std::string_view field) {
  std::string lowered = text::collapse_whitespace(field);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return lowered;
}

bool is_fence(std::string_view line) {
  return text::trim(line).substr(0, 3) == "```";
}

bool matches_header(std::string_view line,
                    const std::vector<std::string>& expected) {
  if (text::trim(line).empty()) return false;
  csv::Grid fields;
  try {
    fields = csv::parse(line);
  } catch (const Error&) {
    return false;
  }
  if (fields.size() != 1 || fields.front().size() != expected.size()) return false;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (header_key(fields.front()[i]) != header_key(expected[i])) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> parse_variant_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('$', pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('$', open + 1);
    if (close == std::string_view::npos) break;
    const auto variant = text::trim(text.substr(open + 1, close - open - 1));
    if (!variant.empty() &&
        std::find(out.begin(), out.end(), variant) == out.end()) {
      out.emplace_back(variant);
    }
    pos = close + 1;
  }
  if (out.empty() && !text::trim(text).empty()) {
    spdlog::debug("no $variant$ pairs in model answer: {}", text);
  }
  return out;
}

CsvBlock parse_csv_block(std::string_view text,
                         const std::vector<std::string>& expected_header) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }

  std::size_t header_line = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (matches_header(lines[i], expected_header)) {
      header_line = i;
      break;
    }
  }
  if (header_line == lines.size()) {
    throw Error(ErrorCode::kNoTableFound,
                "model answer has no line matching the expected CSV header");
  }

  std::string body;
  for (std::size_t i = header_line + 1; i < lines.size(); ++i) {
    if (is_fence(lines[i])) {
      if (!body.empty()) break;  // closing fence ends the block
      continue;
    }
    if (text::trim(lines[i]).empty()) continue;
    if (matches_header(lines[i], expected_header)) continue;
    body.append(lines[i]);
    body.push_back('\n');
  }

  CsvBlock block;
  csv::Grid grid;
  try {
    grid = csv::parse(body);
  } catch (const Error&) {
    // An unbalanced quote in model output: fall back to line-wise parsing.
    for (const auto& line : text::split(body, '\n')) {
      if (line.empty()) continue;
      grid.push_back(text::split(line, ','));
    }
  }
  const std::size_t width = expected_header.size();
  for (auto& row : grid) {
    if (row.size() > width) {
      ++block.truncated_rows;
      spdlog::warn("model CSV row has {} columns, truncating to {}", row.size(),
                   width);
    }
    row.resize(width);
    for (auto& cell : row) {
      cell = std::string(text::trim(cell));
      if (cell == "None") cell.clear();
    }
    block.rows.push_back(std::move(row));
  }
  return block;
}

std::optional<bool> parse_verdict(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
    std::string word(text.substr(i, j - i));
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (word == "YES") return true;
    if (word == "NO") return false;
    i = j;
  }
  return std::nullopt;
}

}  // namespace autopk
