#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "autopk/pk_record.hpp"

namespace autopk {

enum class NumericRule {
  kTrim,                  // trim and collapse whitespace
  kDecimalComma,          // "7 , 3" -> "7.3"
  kStripThousands,        // "1,250" -> "1250"
  kPlusMinus,             // "+/-", "+-", "±" -> " ± " with single spaces
};

std::string_view to_string(NumericRule rule);
NumericRule numeric_rule_from_string(std::string_view s);

using AbbreviationMap = std::map<std::string, std::string, std::less<>>;

struct PostprocessOptions {
  AbbreviationMap abbreviations;  // keys are matched after lowercasing
  std::set<PkField> abbreviation_fields = {PkField::kAnimal,
                                           PkField::kRoute,
                                           PkField::kMatrix};
  std::vector<NumericRule> numeric_rules = {NumericRule::kTrim,
                                            NumericRule::kStripThousands,
                                            NumericRule::kPlusMinus,
                                            NumericRule::kTrim};
};

// {"abbreviations": {"iv": "intravenous", ...}}
AbbreviationMap load_abbreviations(const std::filesystem::path& path);

// Applies the rules in order to one numeric field value.
std::string normalize_numeric(std::string_view value,
                              const std::vector<NumericRule>& rules);

// Replaces abbreviations occurring as a whole field or as whole
// whitespace-delimited tokens.
std::string expand_abbreviations(std::string_view value,
                                 const AbbreviationMap& abbreviations);

// Drops records with an empty value, lowercases every field, expands
// abbreviations and normalizes pk_parameter_value and drug_dosage.
std::vector<PkRecord> postprocess(std::vector<PkRecord> records,
                                  const PostprocessOptions& options);

}  // namespace autopk
