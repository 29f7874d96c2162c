#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "autopk/csv.hpp"

namespace autopk {

// Contents of consecutive `$...$` pairs, trimmed, in order, exact duplicates
// and empty pairs dropped. Text outside the pairs is ignored.
std::vector<std::string> parse_variant_list(std::string_view text);

struct CsvBlock {
  csv::Grid rows;                  // each row has exactly header.size() cells
  std::size_t truncated_rows = 0;  // rows that had more cells than the header
};

// Finds the first line whose fields match `expected_header` (case and
// whitespace insensitive) and parses the CSV that follows it. Code-fence
// lines, blank lines and repeated header lines are skipped; cells are
// trimmed and the literal "None" becomes empty. Throws Error(kNoTableFound)
// when no header line exists.
CsvBlock parse_csv_block(std::string_view text,
                         const std::vector<std::string>& expected_header);

// First standalone YES or NO word (case-insensitive); nullopt otherwise.
std::optional<bool> parse_verdict(std::string_view text);

}  // namespace autopk
