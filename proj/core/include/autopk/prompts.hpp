#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autopk {

enum class PromptRole {
  kVariantExtraction,   // seed variants from one table
  kVariantValidation,   // YES/NO check of a hybrid-similarity candidate
  kTableReconstruction, // key-value text -> standardized CSV
  kDirectBaseline,      // raw CSV -> standardized CSV
};

std::string_view to_string(PromptRole role);
PromptRole prompt_role_from_string(std::string_view s);

struct ChatMessage {
  std::string role;  // "user" | "assistant" | "system"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// One few-shot exemplar: the full user turn and the expected answer.
struct Shot {
  std::string input;
  std::string output;

  bool operator==(const Shot&) const = default;
};

struct PromptTemplate {
  PromptRole role = PromptRole::kVariantExtraction;
  std::string body;  // contains "{name}" placeholders
  std::vector<Shot> shots;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

inline constexpr std::size_t kDefaultShotCount = 5;

// Literal bound to absent optional metadata.
inline constexpr std::string_view kNoneLiteral = "None";

// Built-in body for `role` with no shots.
PromptTemplate default_template(PromptRole role);

// Keeps the first `count` shots.
PromptTemplate with_shot_count(PromptTemplate prompt, std::size_t count);

// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

// Substitutes every placeholder in a single pass (bound values are not
// rescanned), then prepends the shots as alternating user/assistant turns.
// Throws Error(kUnboundPlaceholder) naming the first missing binding.
std::vector<ChatMessage> render(const PromptTemplate& prompt,
                                const Bindings& bindings);

std::string value_or_none(const std::optional<std::string>& value);

// Shot file: {"shots": [{"input": "...", "output": "..."}, ...]}.
std::vector<Shot> load_shots(const std::filesystem::path& path);

// Column guidance bound to "{Short Explanation About Each Column of Table}".
std::string_view default_column_guidance();

// Placeholder names used by the built-in templates.
namespace slot {
inline constexpr std::string_view kTableCsv = "Table in CSV Format";
inline constexpr std::string_view kPkParameter = "pk parameter";
inline constexpr std::string_view kAliases = "variants Aliases";
inline constexpr std::string_view kNonVariants = "Non Variants Alias";
inline constexpr std::string_view kKnownVariants = "Known Variants";
inline constexpr std::string_view kCandidate = "Candidate";
inline constexpr std::string_view kColumnGuidance =
    "Short Explanation About Each Column of Table";
inline constexpr std::string_view kCustomTable = "Custom Format Table";
inline constexpr std::string_view kFootnote = "Table Footnote";
inline constexpr std::string_view kCaption = "Table Caption";
inline constexpr std::string_view kTitle = "Article Title";
inline constexpr std::string_view kAbstract = "Article Abstract";
}  // namespace slot

}  // namespace autopk
