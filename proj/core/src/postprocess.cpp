#include "autopk/postprocess.hpp"

#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "autopk/error.hpp"
#include "autopk/text.hpp"

namespace autopk {
namespace {

constexpr std::string_view kPlusMinus = "±";

std::string replace_all(std::string s, std::string_view from,
                        std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string apply(NumericRule rule, std::string value) {
  switch (rule) {
    case NumericRule::kTrim:
      return text::collapse_whitespace(value);
    case NumericRule::kDecimalComma: {
      static const std::regex re(R"((\d)\s*,\s*(\d))");
      return std::regex_replace(value, re, "$1.$2");
    }
    case NumericRule::kStripThousands: {
      static const std::regex re(R"((\d),(\d{3})(?!\d))");
      for (;;) {
        auto next = std::regex_replace(value, re, "$1$2");
        if (next == value) return value;
        value = std::move(next);
      }
    }
    case NumericRule::kPlusMinus: {
      value = replace_all(std::move(value), "+/-", kPlusMinus);
      value = replace_all(std::move(value), "+-", kPlusMinus);
      value = replace_all(std::move(value), kPlusMinus, " ± ");
      return text::collapse_whitespace(value);
    }
  }
  return value;
}

}  // namespace

std::string_view to_string(NumericRule rule) {
  switch (rule) {
    case NumericRule::kTrim: return "trim";
    case NumericRule::kDecimalComma: return "decimal_comma";
    case NumericRule::kStripThousands: return "strip_thousands";
    case NumericRule::kPlusMinus: return "plus_minus";
  }
  return "unknown";
}

NumericRule numeric_rule_from_string(std::string_view s) {
  for (auto r : {NumericRule::kTrim, NumericRule::kDecimalComma,
                 NumericRule::kStripThousands, NumericRule::kPlusMinus}) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown numeric rule '" + std::string(s) + "'");
}

AbbreviationMap load_abbreviations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  AbbreviationMap map;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& [key, value] : doc.at("abbreviations").items()) {
      map.emplace(text::to_lower(text::trim(key)),
                  text::to_lower(value.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedInput,
                path.string() + ": " + e.what());
  }
  return map;
}

std::string normalize_numeric(std::string_view value,
                              const std::vector<NumericRule>& rules) {
  std::string out(value);
  for (auto rule : rules) out = apply(rule, std::move(out));
  return out;
}

std::string expand_abbreviations(std::string_view value,
                                 const AbbreviationMap& abbreviations) {
  const std::string whole = text::collapse_whitespace(value);
  if (auto it = abbreviations.find(whole); it != abbreviations.end()) {
    return it->second;
  }
  std::vector<std::string> tokens;
  for (auto& token : text::split(whole, ' ')) {
    if (auto it = abbreviations.find(token); it != abbreviations.end()) {
      tokens.push_back(it->second);
    } else {
      tokens.push_back(std::move(token));
    }
  }
  return text::join(tokens, " ");
}

std::vector<PkRecord> postprocess(std::vector<PkRecord> records,
                                  const PostprocessOptions& options) {
  std::vector<PkRecord> out;
  out.reserve(records.size());
  for (auto& record : records) {
    if (text::trim(record[PkField::kValue]).empty()) continue;
    for (std::size_t i = 0; i < kPkFieldCount; ++i) {
      auto& field = record.fields[i];
      field = text::to_lower(text::trim(field));
      const auto id = static_cast<PkField>(i);
      if (options.abbreviation_fields.count(id)) {
        field = expand_abbreviations(field, options.abbreviations);
      }
      if (id == PkField::kValue || id == PkField::kDosage) {
        field = normalize_numeric(field, options.numeric_rules);
      }
    }
    if (record[PkField::kValue].empty()) continue;
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace autopk
