#include "dnsxray/observation.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace dnsxray {

std::string_view to_string(QType t) {
    switch (t) {
    case QType::A: return "A";
    case QType::NS: return "NS";
    case QType::PTR: return "PTR";
    case QType::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(RCode r) {
    switch (r) {
    case RCode::NOERROR: return "NOERROR";
    case RCode::NXDOMAIN: return "NXDOMAIN";
    case RCode::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(RType t) {
    switch (t) {
    case RType::A: return "A";
    case RType::NS: return "NS";
    case RType::PTR: return "PTR";
    }
    return "A";
}

std::optional<QType> parse_qtype(std::string_view s) {
    if (s == "A") return QType::A;
    if (s == "NS") return QType::NS;
    if (s == "PTR") return QType::PTR;
    if (s == "OTHER") return QType::OTHER;
    return std::nullopt;
}

std::optional<RCode> parse_rcode(std::string_view s) {
    if (s == "NOERROR") return RCode::NOERROR;
    if (s == "NXDOMAIN") return RCode::NXDOMAIN;
    if (s == "OTHER") return RCode::OTHER;
    return std::nullopt;
}

std::optional<RType> parse_rtype(std::string_view s) {
    if (s == "A") return RType::A;
    if (s == "NS") return RType::NS;
    if (s == "PTR") return RType::PTR;
    return std::nullopt;
}

std::string normalize_name(std::string_view name) {
    if (!name.empty() && name.back() == '.') name.remove_suffix(1);
    std::string out(name);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_labels(std::string_view name) {
    std::vector<std::string_view> labels;
    std::size_t start = 0;
    while (true) {
        auto dot = name.find('.', start);
        if (dot == std::string_view::npos) {
            labels.push_back(name.substr(start));
            break;
        }
        labels.push_back(name.substr(start, dot - start));
        start = dot + 1;
    }
    return labels;
}

std::optional<std::string> validate_name(std::string_view name) {
    if (name.empty()) return "empty name";
    if (name.size() > 253) return "name longer than 253 characters";
    for (auto label : split_labels(name)) {
        if (label.empty()) return "empty label in '" + std::string(name) + "'";
        if (label.size() > 63) return "label longer than 63 characters";
    }
    for (unsigned char c : name) {
        if (std::isupper(c)) return "name not lowercase";
        if (std::isspace(c) || c < 0x20) return "name contains whitespace or control characters";
    }
    return std::nullopt;
}

std::optional<std::string> validate_observation(const DnsObservation& obs) {
    if (auto err = validate_name(obs.qname)) return err;
    if (obs.rcode != RCode::NOERROR && !obs.answers.empty())
        return "answers present on a non-NOERROR response";
    for (const auto& a : obs.answers) {
        if (a.ttl > kMaxTtl) return "ttl exceeds 2^31-1";
        if (a.rtype == RType::A) {
            if (!parse_ipv4(a.rdata)) return "A record rdata is not an IPv4 address: '" + a.rdata + "'";
        } else if (auto err = validate_name(a.rdata)) {
            return "bad " + std::string(to_string(a.rtype)) + " rdata: " + *err;
        }
    }
    return std::nullopt;
}

std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
    std::uint32_t addr = 0;
    const char* p = s.data();
    const char* end = s.data() + s.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        if (p == end || !std::isdigit(static_cast<unsigned char>(*p))) return std::nullopt;
        unsigned value = 0;
        auto [next, ec] = std::from_chars(p, end, value);
        if (ec != std::errc{} || value > 255 || next - p > 3) return std::nullopt;
        addr = (addr << 8) | value;
        p = next;
    }
    if (p != end) return std::nullopt;
    return addr;
}

std::string format_ipv4(std::uint32_t addr) {
    return std::to_string(addr >> 24) + '.' + std::to_string((addr >> 16) & 0xff) + '.' +
           std::to_string((addr >> 8) & 0xff) + '.' + std::to_string(addr & 0xff);
}

FilterResult filter_resolved(std::vector<DnsObservation> observations) {
    FilterResult result;
    result.kept.reserve(observations.size());
    for (auto& obs : observations) {
        if (obs.rcode == RCode::NOERROR)
            result.kept.push_back(std::move(obs));
        else
            ++result.dropped;
    }
    return result;
}

} // namespace dnsxray
