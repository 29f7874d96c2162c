#include "autopk/prompts.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "autopk/error.hpp"

namespace autopk {
namespace {

constexpr std::string_view kVariantExtractionBody =
    R"(Input: {Table in CSV Format}

Instruction: Extract all variants of {pk parameter} (in various forms, like {variants Aliases}) based on the table provided. Write the exact names in the format of <$variant$> using $$ symbols like $variant1$, $variant2$, etc, without adding any extra text and without further information.
Only provide {pk parameter} exactly as shown in the table without any changes. If a variant is embedded in a multi-header format like random1^variant1^random2, return only what relates to variant1, e.g., $variant1$. It can be more than 1 form of {pk parameter} in the table.
Do not include any forms where: {Non Variants Alias}

Answer format: $variant1$,$variant2$)";

constexpr std::string_view kVariantValidationBody =
    R"(Decide whether a table cell names the pharmacokinetic parameter {pk parameter}.
Known variants of {pk parameter}: {Known Variants}
Candidate cell text: {Candidate}

Does the candidate denote {pk parameter} itself (possibly abbreviated, reformatted or annotated), and not a different parameter or quantity?
Answer with exactly one word: YES or NO.)";

constexpr std::string_view kPkColumnsLine =
    "pk_parameter, pk_parameter_unit, pk_parameter_value, animal, drug, "
    "drug_dosage, route_of_administration, animal_matrix/commodity";

constexpr std::string_view kReconstructionBody =
    R"(Extract PK data from any tables may appear inside a scientific document. Return one and only one comma-separated table with the header in the exact column order shown below—no commentary, no extra columns, no blank lines. My tables are in the specific text representation format which I combined my target row to the header with @ sign for each cell and header can combine to other header with '^' if the table is multi-header table. I want to convert this into a table format with the following columns (if not exists any data only left it with None):
{PK Columns}

Extraction rules:
{Short Explanation About Each Column of Table}

Inputs:
This is my custom format table: {Custom Format Table}
This is footnote of my table in document: {Table Footnote}
This is caption of my table in document: {Table Caption}
This is title of my document: {Article Title}
This is abstract of my document: {Article Abstract}

Output Produce nothing except the final CSV lines in the order specified.

Answer format: Table in CSV comma format text.)";

constexpr std::string_view kDirectBaselineBody =
    R"(Extract PK data from any tables may appear inside a scientific document. Return one and only one comma-separated table with the header in the exact column order shown below—no commentary, no extra columns, no blank lines. My table is given as plain CSV text with commas as separators; multi-row headers are combined into one header row with '^'. I want to convert this into a table format with the following columns (if not exists any data only left it with None):
{PK Columns}

Extraction rules:
{Short Explanation About Each Column of Table}

Inputs:
This is my table in CSV format: {Table in CSV Format}
This is footnote of my table in document: {Table Footnote}
This is caption of my table in document: {Table Caption}
This is title of my document: {Article Title}
This is abstract of my document: {Article Abstract}

Output Produce nothing except the final CSV lines in the order specified.

Answer format: Table in CSV comma format text.)";

constexpr std::string_view kColumnGuidance =
    R"(- pk_parameter: the parameter name exactly as written in the table (e.g. T1/2, CL, AUC0-inf).
- pk_parameter_unit: the unit of the value (e.g. h, mL/min/kg); None when not stated.
- pk_parameter_value: the reported value, keeping any "± error" part.
- animal: the species or animal group the value belongs to.
- drug: the administered drug.
- drug_dosage: the dose with its unit (e.g. 10 mg/kg).
- route_of_administration: how the drug was given (e.g. IV, IM, oral).
- animal_matrix/commodity: the sampled matrix or tissue (e.g. plasma, milk, muscle).
Write one output row per reported value.)";

std::string body_for(PromptRole role) {
  std::string body;
  switch (role) {
    case PromptRole::kVariantExtraction: body = kVariantExtractionBody; break;
    case PromptRole::kVariantValidation: body = kVariantValidationBody; break;
    case PromptRole::kTableReconstruction: body = kReconstructionBody; break;
    case PromptRole::kDirectBaseline: body = kDirectBaselineBody; break;
  }
  // The schema line is fixed text, not a caller binding.
  const std::string_view slot = "{PK Columns}";
  if (auto pos = body.find(slot); pos != std::string::npos) {
    body.replace(pos, slot.size(), kPkColumnsLine);
  }
  return body;
}

}  // namespace

std::string_view to_string(PromptRole role) {
  switch (role) {
    case PromptRole::kVariantExtraction: return "variant_extraction";
    case PromptRole::kVariantValidation: return "variant_validation";
    case PromptRole::kTableReconstruction: return "table_reconstruction";
    case PromptRole::kDirectBaseline: return "direct_baseline";
  }
  return "unknown";
}

PromptRole prompt_role_from_string(std::string_view s) {
  for (auto role : {PromptRole::kVariantExtraction, PromptRole::kVariantValidation,
                    PromptRole::kTableReconstruction, PromptRole::kDirectBaseline}) {
    if (to_string(role) == s) return role;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown prompt role '" +
                                             std::string(s) + "'");
}

PromptTemplate default_template(PromptRole role) {
  return PromptTemplate{role, body_for(role), {}};
}

PromptTemplate with_shot_count(PromptTemplate prompt, std::size_t count) {
  if (prompt.shots.size() > count) prompt.shots.resize(count);
  return prompt;
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = body.find('{', pos)) != std::string_view::npos) {
    const auto close = body.find_first_of("{}", pos + 1);
    if (close == std::string_view::npos || body[close] == '{') {
      pos = (close == std::string_view::npos) ? body.size() : close;
      continue;
    }
    std::string name(body.substr(pos + 1, close - pos - 1));
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
    pos = close + 1;
  }
  return names;
}

std::vector<ChatMessage> render(const PromptTemplate& prompt,
                                const Bindings& bindings) {
  std::string text;
  text.reserve(prompt.body.size() * 2);
  const std::string_view body = prompt.body;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find('{', pos);
    if (open == std::string_view::npos) {
      text.append(body.substr(pos));
      break;
    }
    const auto close = body.find_first_of("{}", open + 1);
    if (close == std::string_view::npos || body[close] == '{') {
      // Lone brace: literal text.
      const auto stop = close == std::string_view::npos ? body.size() : close;
      text.append(body.substr(pos, stop - pos));
      pos = stop;
      continue;
    }
    text.append(body.substr(pos, open - pos));
    const auto name = body.substr(open + 1, close - open - 1);
    auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw Error(ErrorCode::kUnboundPlaceholder,
                  "placeholder {" + std::string(name) + "} is not bound in " +
                      std::string(to_string(prompt.role)) + " prompt");
    }
    text.append(it->second);
    pos = close + 1;
  }

  std::vector<ChatMessage> messages;
  messages.reserve(prompt.shots.size() * 2 + 1);
  for (const auto& shot : prompt.shots) {
    messages.push_back({"user", shot.input});
    messages.push_back({"assistant", shot.output});
  }
  messages.push_back({"user", std::move(text)});
  return messages;
}

std::string value_or_none(const std::optional<std::string>& value) {
  if (!value || value->empty()) return std::string(kNoneLiteral);
  return *value;
}

std::vector<Shot> load_shots(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig, "cannot read shot file " + path.string());
  }
  std::vector<Shot> shots;
  try {
    const auto doc = nlohmann::json::parse(in);
    for (const auto& s : doc.at("shots")) {
      shots.push_back({s.at("input").get<std::string>(),
                       s.at("output").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig,
                "malformed shot file " + path.string() + ": " + e.what());
  }
  return shots;
}

std::string_view default_column_guidance() { return kColumnGuidance; }

}  // namespace autopk
