#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the similarity, postprocessing and evaluation code.
namespace autopk::text {

std::string_view trim(std::string_view s);

// Trims and collapses every run of whitespace to a single ASCII space.
std::string collapse_whitespace(std::string_view s);

// Unicode-aware lowercasing (root locale). Invalid UTF-8 falls back to ASCII.
std::string to_lower(std::string_view s);

// NFC normalization, optionally followed by lowercasing.
std::string normalize(std::string_view s, bool lowercase = true);

// Decodes UTF-8 into code points; invalid bytes map to U+FFFD.
std::u32string to_code_points(std::string_view s);

std::string to_utf8(std::u32string_view points);

std::vector<std::string> split(std::string_view s, char delimiter);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_space(char32_t c);

}  // namespace autopk::text
