#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dnsxray/observation.hpp"

namespace dnsxray {

struct LineParseError {
    std::size_t line = 0;
    std::string reason;
};

struct RecordParseResult {
    std::vector<DnsObservation> observations;
    std::vector<LineParseError> errors;
};

/// Parses a newline-delimited JSON record file. Bad lines are collected in
/// `errors` and parsing continues.
RecordParseResult parse_records(const std::filesystem::path& path);
RecordParseResult parse_records_text(std::string_view text);

std::string format_record(const DnsObservation& obs);
void write_records(std::span<const DnsObservation> observations, const std::filesystem::path& path);

struct PcapParseResult {
    std::vector<DnsObservation> observations;
    /// packets that claimed to be DNS responses but could not be decoded
    std::size_t malformed_packets = 0;
    /// non-IPv4, non-UDP/53, queries, fragments
    std::size_t skipped_packets = 0;
    std::size_t total_packets = 0;
};

/// Classic libpcap reader (microsecond magic, either byte order, Ethernet).
/// Decodes DNS responses carried over UDP source port 53 on IPv4.
PcapParseResult parse_pcap(const std::filesystem::path& path);
PcapParseResult parse_pcap_bytes(std::span<const unsigned char> bytes);

/// Encodes each observation as one Ethernet/IPv4/UDP DNS response packet.
/// The client id, when it is a dotted quad, becomes the destination address.
std::vector<unsigned char> encode_pcap(std::span<const DnsObservation> observations);
void write_pcap(std::span<const DnsObservation> observations, const std::filesystem::path& path);

/// Builds the DNS message alone (no link/IP/UDP headers).
std::vector<unsigned char> encode_dns_response(const DnsObservation& obs, std::uint16_t id);

struct TrafficLoad {
    std::vector<DnsObservation> observations;
    std::vector<std::string> warnings;
};

/// Sniffs the first bytes: pcap magic selects parse_pcap, anything else is
/// treated as a record file. Per-line and per-packet problems become warnings.
TrafficLoad load_traffic(const std::filesystem::path& path);

} // namespace dnsxray
