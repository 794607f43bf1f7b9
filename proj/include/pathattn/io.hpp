#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pathattn {

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);
void write_binary_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

/// Shortest round-trip decimal form of a double ("0.25", "1", "1e-07").
std::string format_number(double value);

/// Splits one CSV line on commas. No quoting support; none of the formats need it.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view s);

}  // namespace pathattn
