#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace manbench::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercase, trim, collapse internal whitespace, strip surrounding quotes
// and parentheses. Used wherever a model echoes an option's text.
std::string normalize_option(std::string_view s);

std::size_t edit_distance(std::string_view a, std::string_view b);

// Edit distance divided by the longer length; 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

// True when `needle` occurs in `haystack` bounded by non-alphanumerics.
bool contains_word(std::string_view haystack, std::string_view needle);

std::string hex_encode(const unsigned char* data, std::size_t len);

std::string sha256_hex(std::string_view data);

// UTC, second resolution, "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

}  // namespace manbench::text
