#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace autopk::csv {

using Row = std::vector<std::string>;
using Grid = std::vector<Row>;

// RFC 4180 reader. Accepts LF or CRLF line endings and quoted fields with
// embedded separators, quotes and newlines. A trailing line break does not
// produce an extra row. Throws Error(kMalformedInput) on an unterminated quote.
Grid parse(std::string_view text);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view field);

std::string format_row(const Row& row);

// Rows joined with "\n", no trailing newline.
std::string format(const Grid& grid);

}  // namespace autopk::csv
