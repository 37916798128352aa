#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dnsxray {

/// Unquoted comma-separated fields; none of our tables need quoting.
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Non-empty lines with CR stripped, in file order, paired with 1-based numbers.
std::vector<std::pair<std::size_t, std::string_view>> csv_lines(std::string_view text);

} // namespace dnsxray
