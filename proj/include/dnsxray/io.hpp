#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace dnsxray {

/// Throws Error("FileUnreadable") when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary and renames it into place.
/// Throws Error("FileUnwritable").
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest round-trip decimal form of a double ("0.1", "175", "1e-07").
std::string format_double(double v);

double parse_double(std::string_view s);

} // namespace dnsxray
