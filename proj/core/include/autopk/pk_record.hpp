#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace autopk {

enum class PkField {
  kParameter,
  kUnit,
  kValue,
  kAnimal,
  kDrug,
  kDosage,
  kRoute,
  kMatrix,
};

inline constexpr std::size_t kPkFieldCount = 8;

// Output schema column names, in order.
const std::vector<std::string>& pk_header();
std::string_view to_string(PkField field);
PkField pk_field_from_string(std::string_view column);

struct PkRecord {
  std::array<std::string, kPkFieldCount> fields;

  std::string& operator[](PkField f) { return fields[static_cast<std::size_t>(f)]; }
  const std::string& operator[](PkField f) const {
    return fields[static_cast<std::size_t>(f)];
  }
  bool operator==(const PkRecord&) const = default;
};

PkRecord record_from_row(const std::vector<std::string>& row);
std::vector<std::string> record_to_row(const PkRecord& record);

// CSV with the schema header line.
std::string records_to_csv(const std::vector<PkRecord>& records);
nlohmann::ordered_json record_to_json(const PkRecord& record);

}  // namespace autopk
