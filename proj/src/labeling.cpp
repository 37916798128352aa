#include "dnsxray/labeling.hpp"

#include <algorithm>
#include <cctype>

#include "dnsxray/error.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/observation.hpp"

namespace dnsxray {

std::string_view to_string(Label label) {
    switch (label) {
    case Label::BENIGN: return "benign";
    case Label::MALICIOUS: return "malicious";
    case Label::UNKNOWN: return "unknown";
    }
    return "unknown";
}

Label parse_label(std::string_view s) {
    if (s == "benign" || s == "0") return Label::BENIGN;
    if (s == "malicious" || s == "1") return Label::MALICIOUS;
    if (s == "unknown") return Label::UNKNOWN;
    throw Error("ParseError", "unknown label '" + std::string(s) + "'");
}

std::set<std::string> parse_domain_list(std::string_view text, std::vector<std::string>* warnings) {
    std::set<std::string> entries;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        while (!line.empty() && line.front() == '.') line.remove_prefix(1);
        while (!line.empty() && line.back() == '.') line.remove_suffix(1);

        bool has_space = std::any_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
        std::string entry = normalize_name(line);
        if (has_space || validate_name(entry)) {
            if (warnings) warnings->push_back("line " + std::to_string(line_no) + ": rejected entry '" + std::string(line) + "'");
            continue;
        }
        entries.insert(std::move(entry));
    }
    return entries;
}

DomainLists load_lists(const std::filesystem::path& allow_path, const std::filesystem::path& block_path) {
    DomainLists lists;
    lists.allow_path = allow_path;
    lists.block_path = block_path;
    lists.allow = parse_domain_list(read_file(allow_path), &lists.warnings);
    lists.block = parse_domain_list(read_file(block_path), &lists.warnings);
    if (lists.allow.empty()) lists.warnings.push_back("EmptyList: " + allow_path.string());
    if (lists.block.empty()) lists.warnings.push_back("EmptyList: " + block_path.string());
    return lists;
}

namespace {

bool suffix_listed(std::string_view name, const std::set<std::string>& entries) {
    if (entries.empty()) return false;
    while (true) {
        if (entries.find(std::string(name)) != entries.end()) return true;
        auto dot = name.find('.');
        if (dot == std::string_view::npos) return false;
        name.remove_prefix(dot + 1);
    }
}

} // namespace

Label label_domain(std::string_view name, const DomainLists& lists) {
    if (suffix_listed(name, lists.block)) return Label::MALICIOUS;
    if (suffix_listed(name, lists.allow)) return Label::BENIGN;
    return Label::UNKNOWN;
}

} // namespace dnsxray
