#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dnsxray {

enum class QType { A, NS, PTR, OTHER };
enum class RCode { NOERROR, NXDOMAIN, OTHER };
enum class RType { A, NS, PTR };

std::string_view to_string(QType t);
std::string_view to_string(RCode r);
std::string_view to_string(RType t);

std::optional<QType> parse_qtype(std::string_view s);
std::optional<RCode> parse_rcode(std::string_view s);
std::optional<RType> parse_rtype(std::string_view s);

inline constexpr std::uint32_t kMaxTtl = 0x7fffffffu;

struct AnswerRecord {
    RType rtype = RType::A;
    std::uint32_t ttl = 0;
    /// dotted-quad for A, domain name for NS/PTR
    std::string rdata;

    bool operator==(const AnswerRecord&) const = default;
};

/// One parsed DNS response.
struct DnsObservation {
    std::int64_t timestamp = 0;
    std::string qname;
    QType qtype = QType::A;
    RCode rcode = RCode::NOERROR;
    std::vector<AnswerRecord> answers;
    std::optional<std::string> client_id;

    bool operator==(const DnsObservation&) const = default;
};

/// Lowercases and strips one trailing dot.
std::string normalize_name(std::string_view name);

/// Checks length limits, label limits and lowercase form. Returns a reason
/// when invalid.
std::optional<std::string> validate_name(std::string_view name);

/// Full invariant check of an observation, including its answers.
std::optional<std::string> validate_observation(const DnsObservation& obs);

std::optional<std::uint32_t> parse_ipv4(std::string_view s);
std::string format_ipv4(std::uint32_t addr);

/// Splits a dotted name into labels.
std::vector<std::string_view> split_labels(std::string_view name);

struct FilterResult {
    std::vector<DnsObservation> kept;
    std::size_t dropped = 0;
};

/// Keeps only NOERROR responses.
FilterResult filter_resolved(std::vector<DnsObservation> observations);

} // namespace dnsxray
