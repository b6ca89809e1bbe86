#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared by the line-delimited file formats.
namespace vulnbench::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_word_char(char c);
// Position of the first case-insensitive whole-word occurrence of `needle`
// in `haystack` at or after `from`.
std::optional<std::size_t> find_word_ci(std::string_view haystack, std::string_view needle,
                                        std::size_t from = 0);

// Backslash escaping for '|'-delimited records: \\ \n \r \t \|
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);
// Splits on unescaped '|'. Fields are returned still escaped.
std::vector<std::string> split_record(std::string_view line);

// Shell-style glob supporting '*' and '?'.
bool glob_match(std::string_view pattern, std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Rounds half away from zero, tolerant of binary representation error.
std::string format_fixed(double value, int decimals);

}  // namespace vulnbench::text
