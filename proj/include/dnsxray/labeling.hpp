#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dnsxray {

enum class Label { BENIGN, MALICIOUS, UNKNOWN };

std::string_view to_string(Label label);
Label parse_label(std::string_view s);

struct DomainLists {
    std::set<std::string> allow;
    std::set<std::string> block;
    std::filesystem::path allow_path;
    std::filesystem::path block_path;
    /// non-fatal problems: empty lists, rejected entries
    std::vector<std::string> warnings;
};

/// Parses one list file body: '#' comments and blank lines are skipped,
/// entries lowercased and stripped of surrounding dots.
std::set<std::string> parse_domain_list(std::string_view text, std::vector<std::string>* warnings = nullptr);

DomainLists load_lists(const std::filesystem::path& allow_path, const std::filesystem::path& block_path);

/// MALICIOUS if the name or any parent suffix is blocked, else BENIGN if the
/// name or any parent suffix is allowed, else UNKNOWN.
Label label_domain(std::string_view name, const DomainLists& lists);

} // namespace dnsxray
