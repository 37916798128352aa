#include <array>
#include <cstring>

#include "dnsxray/error.hpp"
#include "dnsxray/ingest.hpp"
#include "dnsxray/io.hpp"

namespace dnsxray {

namespace {

constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;

constexpr std::uint16_t kTypeA = 1;
constexpr std::uint16_t kTypeNS = 2;
constexpr std::uint16_t kTypePTR = 12;
constexpr std::uint16_t kTypeTXT = 16;

struct Malformed {
    const char* what;
};

std::uint32_t load_u32(const unsigned char* p, bool swapped) {
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    if (swapped) v = __builtin_bswap32(v);
    return v;
}

/// Bounds-checked big-endian cursor over one packet.
class Reader {
public:
    explicit Reader(std::span<const unsigned char> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    void seek(std::size_t p) {
        if (p > data_.size()) throw Malformed{"seek past end"};
        pos_ = p;
    }
    void skip(std::size_t n) { seek(pos_ + n); }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        auto hi = u16();
        return (static_cast<std::uint32_t>(hi) << 16) | u16();
    }

    /// Reads a possibly compressed name starting at the cursor.
    std::string name() {
        std::string out;
        std::size_t cursor = pos_;
        std::size_t resume = 0;
        bool jumped = false;
        for (int hops = 0;; ) {
            if (cursor >= data_.size()) throw Malformed{"name runs past end"};
            std::uint8_t len = data_[cursor];
            if ((len & 0xc0) == 0xc0) {
                if (cursor + 1 >= data_.size()) throw Malformed{"truncated name pointer"};
                std::size_t target = static_cast<std::size_t>(((len & 0x3f) << 8) | data_[cursor + 1]);
                if (!jumped) resume = cursor + 2;
                jumped = true;
                if (++hops > 64 || target >= data_.size()) throw Malformed{"bad name pointer"};
                cursor = target;
                continue;
            }
            if ((len & 0xc0) != 0) throw Malformed{"unsupported label type"};
            if (len == 0) {
                ++cursor;
                break;
            }
            if (cursor + 1 + len > data_.size()) throw Malformed{"label runs past end"};
            if (!out.empty()) out += '.';
            out.append(reinterpret_cast<const char*>(&data_[cursor + 1]), len);
            if (out.size() > 255) throw Malformed{"name too long"};
            cursor += 1 + len;
        }
        pos_ = jumped ? resume : cursor;
        return normalize_name(out);
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw Malformed{"truncated"};
    }

    std::span<const unsigned char> data_;
    std::size_t pos_ = 0;
};

QType qtype_from_code(std::uint16_t code) {
    switch (code) {
    case kTypeA: return QType::A;
    case kTypeNS: return QType::NS;
    case kTypePTR: return QType::PTR;
    default: return QType::OTHER;
    }
}

RCode rcode_from_code(unsigned code) {
    if (code == 0) return RCode::NOERROR;
    if (code == 3) return RCode::NXDOMAIN;
    return RCode::OTHER;
}

DnsObservation decode_dns(std::span<const unsigned char> payload) {
    Reader r(payload);
    r.u16(); // id
    std::uint16_t flags = r.u16();
    std::uint16_t qdcount = r.u16();
    std::uint16_t ancount = r.u16();
    r.u16(); // nscount
    r.u16(); // arcount
    if (qdcount == 0) throw Malformed{"response without question"};

    DnsObservation obs;
    obs.rcode = rcode_from_code(flags & 0x0f);
    obs.qname = r.name();
    obs.qtype = qtype_from_code(r.u16());
    r.u16(); // qclass
    for (unsigned i = 1; i < qdcount; ++i) {
        r.name();
        r.skip(4);
    }
    for (unsigned i = 0; i < ancount; ++i) {
        r.name();
        std::uint16_t type = r.u16();
        r.u16(); // class
        std::uint32_t ttl = r.u32();
        std::uint16_t rdlength = r.u16();
        if (r.remaining() < rdlength) throw Malformed{"rdata runs past end"};
        std::size_t rdata_end = r.pos() + rdlength;
        if (ttl > kMaxTtl) ttl = 0; // RFC 2181 section 8
        if (type == kTypeA) {
            if (rdlength != 4) throw Malformed{"A rdata length != 4"};
            obs.answers.push_back({RType::A, ttl, format_ipv4(r.u32())});
        } else if (type == kTypeNS || type == kTypePTR) {
            auto target = r.name();
            if (r.pos() != rdata_end) throw Malformed{"name rdata length mismatch"};
            if (validate_name(target)) throw Malformed{"invalid rdata name"};
            obs.answers.push_back({type == kTypeNS ? RType::NS : RType::PTR, ttl, std::move(target)});
        }
        r.seek(rdata_end);
    }
    if (obs.rcode != RCode::NOERROR) obs.answers.clear();
    if (validate_name(obs.qname)) throw Malformed{"invalid qname"};
    return obs;
}

enum class PacketOutcome { Observation, Skipped, Malformed };

PacketOutcome decode_packet(std::span<const unsigned char> pkt, DnsObservation& out) {
    try {
        Reader r(pkt);
        r.skip(12); // MAC addresses
        std::uint16_t ethertype = r.u16();
        if (ethertype == 0x8100) {
            r.skip(2);
            ethertype = r.u16();
        }
        if (ethertype != 0x0800) return PacketOutcome::Skipped;

        std::size_t ip_start = r.pos();
        std::uint8_t ver_ihl = r.u8();
        if ((ver_ihl >> 4) != 4) return PacketOutcome::Malformed;
        std::size_t ihl = static_cast<std::size_t>(ver_ihl & 0x0f) * 4;
        if (ihl < 20) return PacketOutcome::Malformed;
        r.u8(); // tos
        std::uint16_t total_len = r.u16();
        r.u16(); // id
        std::uint16_t frag = r.u16();
        r.u8(); // ttl
        std::uint8_t proto = r.u8();
        r.skip(2); // checksum
        std::uint32_t src = r.u32();
        std::uint32_t dst = r.u32();
        (void)src;
        if (total_len < ihl || ip_start + total_len > pkt.size()) return PacketOutcome::Malformed;
        if ((frag & 0x2000) != 0 || (frag & 0x1fff) != 0) return PacketOutcome::Skipped;
        if (proto != 17) return PacketOutcome::Skipped;
        r.seek(ip_start + ihl);

        std::uint16_t sport = r.u16();
        r.u16(); // dport
        std::uint16_t udp_len = r.u16();
        r.u16(); // checksum
        if (sport != 53) return PacketOutcome::Skipped;
        if (udp_len < 8 || r.pos() - 8 + udp_len > ip_start + total_len) return PacketOutcome::Malformed;
        auto payload = pkt.subspan(r.pos(), udp_len - 8u);
        if (payload.size() < 12) return PacketOutcome::Malformed;
        if ((payload[2] & 0x80) == 0) return PacketOutcome::Skipped; // a query, not a response

        out = decode_dns(payload);
        out.client_id = format_ipv4(dst);
        return PacketOutcome::Observation;
    } catch (const Malformed&) {
        return PacketOutcome::Malformed;
    }
}

// --- writer ---------------------------------------------------------------

void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v >> 8));
    b.push_back(static_cast<unsigned char>(v & 0xff));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    put_u16(b, static_cast<std::uint16_t>(v >> 16));
    put_u16(b, static_cast<std::uint16_t>(v & 0xffff));
}

void put_u32_le(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u16_le(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

void put_name(std::vector<unsigned char>& b, std::string_view name) {
    for (auto label : split_labels(name)) {
        b.push_back(static_cast<unsigned char>(label.size()));
        b.insert(b.end(), label.begin(), label.end());
    }
    b.push_back(0);
}

std::uint16_t qtype_code(QType t) {
    switch (t) {
    case QType::A: return kTypeA;
    case QType::NS: return kTypeNS;
    case QType::PTR: return kTypePTR;
    case QType::OTHER: return kTypeTXT;
    }
    return kTypeTXT;
}

std::uint16_t ip_checksum(const unsigned char* hdr, std::size_t len) {
    std::uint32_t sum = 0;
    for (std::size_t i = 0; i + 1 < len; i += 2) sum += static_cast<std::uint32_t>((hdr[i] << 8) | hdr[i + 1]);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

constexpr std::uint32_t kServerAddr = 0x0a000035; // 10.0.0.53
constexpr std::uint32_t kDefaultClientAddr = 0x0a000002;

} // namespace

PcapParseResult parse_pcap_bytes(std::span<const unsigned char> bytes) {
    if (bytes.size() < kGlobalHeaderLen) throw Error("NotAPcap", "file shorter than the pcap global header");
    std::uint32_t magic = load_u32(bytes.data(), false);
    bool swapped = false;
    if (magic == kPcapMagicSwapped)
        swapped = true;
    else if (magic != kPcapMagic)
        throw Error("NotAPcap", "bad magic number");
    std::uint32_t linktype = load_u32(bytes.data() + 20, swapped);
    if (linktype != kLinkEthernet)
        throw Error("UnsupportedLinkType", "link type " + std::to_string(linktype) + " (only Ethernet is decoded)");

    PcapParseResult result;
    std::size_t pos = kGlobalHeaderLen;
    while (pos < bytes.size()) {
        ++result.total_packets;
        if (bytes.size() - pos < kRecordHeaderLen) {
            ++result.malformed_packets;
            break;
        }
        std::uint32_t ts_sec = load_u32(bytes.data() + pos, swapped);
        std::uint32_t incl_len = load_u32(bytes.data() + pos + 8, swapped);
        pos += kRecordHeaderLen;
        if (incl_len > bytes.size() - pos) {
            ++result.malformed_packets;
            break;
        }
        DnsObservation obs;
        switch (decode_packet(bytes.subspan(pos, incl_len), obs)) {
        case PacketOutcome::Observation:
            obs.timestamp = ts_sec;
            result.observations.push_back(std::move(obs));
            break;
        case PacketOutcome::Skipped: ++result.skipped_packets; break;
        case PacketOutcome::Malformed: ++result.malformed_packets; break;
        }
        pos += incl_len;
    }
    return result;
}

PcapParseResult parse_pcap(const std::filesystem::path& path) {
    auto data = read_file(path);
    return parse_pcap_bytes({reinterpret_cast<const unsigned char*>(data.data()), data.size()});
}

std::vector<unsigned char> encode_dns_response(const DnsObservation& obs, std::uint16_t id) {
    std::vector<unsigned char> b;
    unsigned rcode = obs.rcode == RCode::NOERROR ? 0 : obs.rcode == RCode::NXDOMAIN ? 3 : 2;
    put_u16(b, id);
    put_u16(b, static_cast<std::uint16_t>(0x8180 | rcode));
    put_u16(b, 1);
    put_u16(b, static_cast<std::uint16_t>(obs.answers.size()));
    put_u16(b, 0);
    put_u16(b, 0);
    put_name(b, obs.qname);
    put_u16(b, qtype_code(obs.qtype));
    put_u16(b, 1);
    for (const auto& a : obs.answers) {
        put_u16(b, 0xc00c); // pointer to the question name
        put_u16(b, a.rtype == RType::A ? kTypeA : a.rtype == RType::NS ? kTypeNS : kTypePTR);
        put_u16(b, 1);
        put_u32(b, a.ttl);
        if (a.rtype == RType::A) {
            auto addr = parse_ipv4(a.rdata);
            if (!addr) throw Error("InvalidObservation", "A rdata '" + a.rdata + "'");
            put_u16(b, 4);
            put_u32(b, *addr);
        } else {
            std::vector<unsigned char> rdata;
            put_name(rdata, a.rdata);
            put_u16(b, static_cast<std::uint16_t>(rdata.size()));
            b.insert(b.end(), rdata.begin(), rdata.end());
        }
    }
    return b;
}

std::vector<unsigned char> encode_pcap(std::span<const DnsObservation> observations) {
    std::vector<unsigned char> out;
    put_u32_le(out, kPcapMagic);
    put_u16_le(out, 2);
    put_u16_le(out, 4);
    put_u32_le(out, 0);
    put_u32_le(out, 0);
    put_u32_le(out, 65535);
    put_u32_le(out, kLinkEthernet);

    std::size_t index = 0;
    for (const auto& obs : observations) {
        if (auto err = validate_observation(obs)) throw Error("InvalidObservation", *err);
        if (obs.timestamp < 0 || obs.timestamp > 0xffffffffLL)
            throw Error("InvalidObservation", "timestamp does not fit a pcap record");
        auto dns = encode_dns_response(obs, static_cast<std::uint16_t>(index & 0xffff));
        if (dns.size() + 28 > 0xffff) throw Error("InvalidObservation", "response too large for one datagram");

        std::uint32_t client = kDefaultClientAddr;
        if (obs.client_id)
            if (auto addr = parse_ipv4(*obs.client_id)) client = *addr;

        std::vector<unsigned char> pkt;
        const unsigned char dst_mac[6] = {0x02, 0, 0, 0, 0, 0x02};
        const unsigned char src_mac[6] = {0x02, 0, 0, 0, 0, 0x01};
        pkt.insert(pkt.end(), dst_mac, dst_mac + 6);
        pkt.insert(pkt.end(), src_mac, src_mac + 6);
        put_u16(pkt, 0x0800);

        std::size_t ip_start = pkt.size();
        auto udp_len = static_cast<std::uint16_t>(8 + dns.size());
        put_u16(pkt, 0x4500);
        put_u16(pkt, static_cast<std::uint16_t>(20 + udp_len));
        put_u16(pkt, static_cast<std::uint16_t>(index & 0xffff));
        put_u16(pkt, 0);
        pkt.push_back(64);
        pkt.push_back(17);
        put_u16(pkt, 0);
        put_u32(pkt, kServerAddr);
        put_u32(pkt, client);
        auto csum = ip_checksum(pkt.data() + ip_start, 20);
        pkt[ip_start + 10] = static_cast<unsigned char>(csum >> 8);
        pkt[ip_start + 11] = static_cast<unsigned char>(csum & 0xff);

        put_u16(pkt, 53);
        put_u16(pkt, static_cast<std::uint16_t>(40000 + index % 20000));
        put_u16(pkt, udp_len);
        put_u16(pkt, 0);
        pkt.insert(pkt.end(), dns.begin(), dns.end());

        put_u32_le(out, static_cast<std::uint32_t>(obs.timestamp));
        put_u32_le(out, 0);
        put_u32_le(out, static_cast<std::uint32_t>(pkt.size()));
        put_u32_le(out, static_cast<std::uint32_t>(pkt.size()));
        out.insert(out.end(), pkt.begin(), pkt.end());
        ++index;
    }
    return out;
}

void write_pcap(std::span<const DnsObservation> observations, const std::filesystem::path& path) {
    auto bytes = encode_pcap(observations);
    write_file_atomic(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

TrafficLoad load_traffic(const std::filesystem::path& path) {
    auto data = read_file(path);
    TrafficLoad load;
    if (data.size() >= 4) {
        auto magic = load_u32(reinterpret_cast<const unsigned char*>(data.data()), false);
        if (magic == kPcapMagic || magic == kPcapMagicSwapped) {
            auto res = parse_pcap_bytes({reinterpret_cast<const unsigned char*>(data.data()), data.size()});
            load.observations = std::move(res.observations);
            if (res.malformed_packets > 0)
                load.warnings.push_back(std::to_string(res.malformed_packets) + " malformed packets skipped");
            if (res.skipped_packets > 0)
                load.warnings.push_back(std::to_string(res.skipped_packets) + " non-DNS-response packets skipped");
            return load;
        }
    }
    auto res = parse_records_text(data);
    load.observations = std::move(res.observations);
    for (const auto& e : res.errors)
        load.warnings.push_back("line " + std::to_string(e.line) + ": " + e.reason);
    return load;
}

} // namespace dnsxray
