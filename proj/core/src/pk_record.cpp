#include "autopk/pk_record.hpp"

#include "autopk/csv.hpp"
#include "autopk/error.hpp"

namespace autopk {

const std::vector<std::string>& pk_header() {
  static const std::vector<std::string> header = {
      "pk_parameter", "pk_parameter_unit", "pk_parameter_value",
      "animal",       "drug",              "drug_dosage",
      "route_of_administration", "animal_matrix/commodity"};
  return header;
}

std::string_view to_string(PkField field) {
  return pk_header()[static_cast<std::size_t>(field)];
}

PkField pk_field_from_string(std::string_view column) {
  const auto& header = pk_header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) return static_cast<PkField>(i);
  }
  if (column == "animal_matrix_commodity") return PkField::kMatrix;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown output column '" + std::string(column) + "'");
}

PkRecord record_from_row(const std::vector<std::string>& row) {
  PkRecord record;
  for (std::size_t i = 0; i < kPkFieldCount && i < row.size(); ++i) {
    record.fields[i] = row[i];
  }
  return record;
}

std::vector<std::string> record_to_row(const PkRecord& record) {
  return {record.fields.begin(), record.fields.end()};
}

std::string records_to_csv(const std::vector<PkRecord>& records) {
  csv::Grid grid;
  grid.reserve(records.size() + 1);
  grid.push_back(pk_header());
  for (const auto& r : records) grid.push_back(record_to_row(r));
  return csv::format(grid) + "\n";
}

nlohmann::ordered_json record_to_json(const PkRecord& record) {
  nlohmann::ordered_json doc;
  const auto& header = pk_header();
  for (std::size_t i = 0; i < kPkFieldCount; ++i) doc[header[i]] = record.fields[i];
  return doc;
}

}  // namespace autopk
