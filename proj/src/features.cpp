#include "dnsxray/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

#include "dnsxray/csv.hpp"
#include "dnsxray/error.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/parallel.hpp"

namespace dnsxray {

namespace {

constexpr std::int64_t kHour = 3600;
constexpr std::size_t kHoursPerDay = 24;

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pstddev_of(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::size_t bin_of(std::int64_t ts, std::int64_t window_start) {
    return static_cast<std::size_t>((ts - window_start) / kHour);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

const std::array<std::string_view, kNumFeatures>& feature_names() {
    static const std::array<std::string_view, kNumFeatures> names = {
        "glob_short_lived", "glob_life_ratio", "daily_similarity", "local_numOf_changes",
        "stddev_before_change", "idle", "popular", "unique_ips",
        "unique_ccode", "rev_arec", "rev_nsrec", "rev_asnrec",
        "shared_ips", "ttl_avg", "ttl_stddev", "unique_ttls",
        "ttl_changes", "ttl_range1", "ttl_range100", "ttl_range300",
        "ttl_range900", "ttl_rangeinf", "num_chars_pct", "pct_of_lms",
    };
    return names;
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    return std::nullopt;
}

// --- aggregation ------------------------------------------------------------

AggregateMap aggregate(std::span<const DnsObservation> observations, std::int64_t window_start,
                       std::int64_t window_end) {
    if (window_end <= window_start) throw Error("InvalidWindow", "window_end must exceed window_start");
    const auto n_bins = static_cast<std::size_t>((window_end - window_start + kHour - 1) / kHour);

    struct Answer {
        std::int64_t ts;
        std::uint32_t ttl;
        std::uint32_t ip;
        auto operator<=>(const Answer&) const = default;
    };
    std::map<std::string, std::vector<Answer>, std::less<>> answers;

    AggregateMap aggs;
    for (const auto& obs : observations) {
        if (obs.timestamp < window_start || obs.timestamp >= window_end)
            throw Error("ObservationOutOfWindow", obs.qname + " at " + std::to_string(obs.timestamp));
        if (obs.qtype != QType::A) continue;
        auto [it, inserted] = aggs.try_emplace(obs.qname);
        auto& agg = it->second;
        if (inserted) {
            agg.name = obs.qname;
            agg.window_start = window_start;
            agg.window_end = window_end;
            agg.hourly_counts.assign(n_bins, 0);
            agg.first_seen = obs.timestamp;
            agg.last_seen = obs.timestamp;
        }
        ++agg.hourly_counts[bin_of(obs.timestamp, window_start)];
        ++agg.total_queries;
        agg.first_seen = std::min(agg.first_seen, obs.timestamp);
        agg.last_seen = std::max(agg.last_seen, obs.timestamp);
        for (const auto& a : obs.answers) {
            if (a.rtype != RType::A) continue;
            auto addr = parse_ipv4(a.rdata);
            if (!addr) continue;
            answers[obs.qname].push_back({obs.timestamp, a.ttl, *addr});
        }
    }
    for (auto& [name, list] : answers) {
        std::sort(list.begin(), list.end());
        auto& agg = aggs.find(name)->second;
        agg.ips.reserve(list.size());
        agg.ttls.reserve(list.size());
        for (const auto& a : list) {
            agg.ips.push_back({a.ts, a.ip});
            agg.ttls.push_back({a.ts, a.ttl});
        }
    }
    return aggs;
}

// --- time-based -------------------------------------------------------------

std::vector<std::size_t> cusum_change_points(std::span<const double> series, double threshold_sigmas,
                                             double drift_sigmas) {
    std::vector<std::size_t> points;
    double sigma = pstddev_of(series);
    if (series.size() < 2 || sigma == 0.0) return points;
    const double h = threshold_sigmas * sigma;
    const double k = drift_sigmas * sigma;

    double seg_sum = 0.0;
    std::size_t seg_len = 0;
    double pos = 0.0, neg = 0.0;
    std::size_t pos_onset = 0, neg_onset = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double x = series[i];
        if (seg_len == 0) {
            seg_sum = x;
            seg_len = 1;
            continue;
        }
        const double d = x - seg_sum / static_cast<double>(seg_len);
        const double next_pos = std::max(0.0, pos + d - k);
        const double next_neg = std::max(0.0, neg - d - k);
        if (next_pos > 0.0 && pos == 0.0) pos_onset = i;
        if (next_neg > 0.0 && neg == 0.0) neg_onset = i;
        pos = next_pos;
        neg = next_neg;
        if (pos > h || neg > h) {
            const std::size_t onset = pos > h ? pos_onset : neg_onset;
            points.push_back(onset);
            seg_sum = 0.0;
            for (std::size_t j = onset; j <= i; ++j) seg_sum += series[j];
            seg_len = i - onset + 1;
            pos = neg = 0.0;
            continue;
        }
        seg_sum += x;
        ++seg_len;
    }
    return points;
}

std::array<double, 7> time_features(const DomainAggregate& agg, const TimeParams& params) {
    std::array<double, 7> out{};
    const std::int64_t life = agg.last_seen - agg.first_seen;
    const double window = static_cast<double>(agg.window_end - agg.window_start);

    out[0] = life < params.short_life_seconds ? 1.0 : 0.0;
    out[1] = std::min(1.0, static_cast<double>(life + kHour) / window);

    // daily_similarity: mean pairwise cosine over active days
    const std::size_t n_bins = agg.hourly_counts.size();
    const std::size_t n_days = (n_bins + kHoursPerDay - 1) / kHoursPerDay;
    std::vector<std::vector<double>> active_days;
    for (std::size_t d = 0; d < n_days; ++d) {
        std::vector<double> day(kHoursPerDay, 0.0);
        double total = 0.0;
        for (std::size_t h = 0; h < kHoursPerDay && d * kHoursPerDay + h < n_bins; ++h) {
            day[h] = agg.hourly_counts[d * kHoursPerDay + h];
            total += day[h];
        }
        if (total > 0.0) active_days.push_back(std::move(day));
    }
    if (active_days.size() >= 2) {
        double sum = 0.0;
        std::size_t pairs = 0;
        for (std::size_t a = 0; a < active_days.size(); ++a)
            for (std::size_t b = a + 1; b < active_days.size(); ++b) {
                sum += cosine(active_days[a], active_days[b]);
                ++pairs;
            }
        out[2] = sum / static_cast<double>(pairs);
    }

    std::vector<double> series(agg.hourly_counts.begin(), agg.hourly_counts.end());
    auto changes = cusum_change_points(series, params.cusum_threshold, params.cusum_drift);
    out[3] = static_cast<double>(changes.size());
    if (changes.size() >= 2) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < changes.size(); ++i) gaps.push_back(static_cast<double>(changes[i] - changes[i - 1]));
        out[4] = pstddev_of(gaps);
    }

    if (n_bins > 0) {
        const std::size_t first = bin_of(agg.first_seen, agg.window_start);
        const std::size_t last = bin_of(agg.last_seen, agg.window_start);
        std::size_t idle = 0, popular = 0;
        for (std::size_t b = first; b <= last; ++b) {
            if (agg.hourly_counts[b] == 0) ++idle;
            if (agg.hourly_counts[b] >= params.popular_threshold) ++popular;
        }
        const double span = static_cast<double>(last - first + 1);
        out[5] = static_cast<double>(idle) / span;
        out[6] = static_cast<double>(popular) / span;
    }
    return out;
}

// --- answer-based -----------------------------------------------------------

void GeoTable::add(std::uint32_t prefix, int length, std::string country) {
    if (length < 0 || length > 32) throw Error("ParseError", "prefix length out of range");
    const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
    by_length_[static_cast<std::size_t>(length)][prefix & mask] = std::move(country);
}

std::optional<std::string_view> GeoTable::lookup(std::uint32_t addr) const {
    for (int length = 32; length >= 0; --length) {
        const auto& table = by_length_[static_cast<std::size_t>(length)];
        if (table.empty()) continue;
        const std::uint32_t mask = length == 0 ? 0u : ~0u << (32 - length);
        if (auto it = table.find(addr & mask); it != table.end()) return std::string_view(it->second);
    }
    return std::nullopt;
}

std::size_t GeoTable::size() const {
    std::size_t n = 0;
    for (const auto& t : by_length_) n += t.size();
    return n;
}

void AuxiliaryTables::add_word(std::string word) {
    if (word.size() < 3) return;
    longest_word = std::max(longest_word, word.size());
    dictionary.insert(std::move(word));
}

namespace {

std::array<double, 6> answer_features_impl(const DomainAggregate& agg, const AuxiliaryTables& aux,
                                           std::size_t shared) {
    std::array<double, 6> out{};
    std::set<std::uint32_t> distinct;
    for (const auto& ip : agg.ips) distinct.insert(ip.value);
    out[0] = static_cast<double>(distinct.size());

    std::set<std::string_view> countries;
    std::size_t rev_a = 0, rev_ns = 0, rev_asn = 0;
    for (auto ip : distinct) {
        auto cc = aux.geo.lookup(ip);
        countries.insert(cc ? *cc : std::string_view("??"));
        if (auto it = aux.rdns.find(ip); it != aux.rdns.end()) {
            rev_a += it->second.has_a;
            rev_ns += it->second.has_ns;
            rev_asn += it->second.asn.has_value();
        }
    }
    out[1] = static_cast<double>(countries.size());
    if (!distinct.empty()) {
        const double n = static_cast<double>(distinct.size());
        out[2] = static_cast<double>(rev_a) / n;
        out[3] = static_cast<double>(rev_ns) / n;
        out[4] = static_cast<double>(rev_asn) / n;
    }
    out[5] = static_cast<double>(shared);
    return out;
}

} // namespace

std::array<double, 6> answer_features(const DomainAggregate& agg, const AggregateMap& all_aggs,
                                      const AuxiliaryTables& aux) {
    std::set<std::uint32_t> mine;
    for (const auto& ip : agg.ips) mine.insert(ip.value);
    std::size_t shared = 0;
    for (const auto& [name, other] : all_aggs) {
        if (name == agg.name) continue;
        for (const auto& ip : other.ips)
            if (mine.count(ip.value)) {
                ++shared;
                break;
            }
    }
    return answer_features_impl(agg, aux, shared);
}

SharedIpIndex::SharedIpIndex(const AggregateMap& aggs) {
    std::size_t id = 0;
    for (const auto& [name, agg] : aggs) {
        id_.emplace(std::string_view(name), id);
        std::set<std::uint32_t> distinct;
        for (const auto& ip : agg.ips) distinct.insert(ip.value);
        for (auto ip : distinct) domains_by_ip_[ip].push_back(id);
        ++id;
    }
}

std::size_t SharedIpIndex::shared_with(const DomainAggregate& agg) const {
    auto self = id_.find(agg.name);
    std::set<std::size_t> others;
    std::set<std::uint32_t> distinct;
    for (const auto& ip : agg.ips) distinct.insert(ip.value);
    for (auto ip : distinct) {
        auto it = domains_by_ip_.find(ip);
        if (it == domains_by_ip_.end()) continue;
        for (auto d : it->second)
            if (self == id_.end() || d != self->second) others.insert(d);
    }
    return others.size();
}

std::array<double, 6> answer_features(const DomainAggregate& agg, const SharedIpIndex& index,
                                      const AuxiliaryTables& aux) {
    return answer_features_impl(agg, aux, index.shared_with(agg));
}

// --- TTL-based --------------------------------------------------------------

std::array<double, 9> ttl_features(std::span<const std::uint32_t> ttls) {
    std::array<double, 9> out{};
    if (ttls.empty()) return out;
    const double n = static_cast<double>(ttls.size());
    std::vector<double> values(ttls.begin(), ttls.end());
    out[0] = mean_of(values);
    out[1] = pstddev_of(values);
    out[2] = static_cast<double>(std::set<std::uint32_t>(ttls.begin(), ttls.end()).size());
    std::size_t changes = 0;
    for (std::size_t i = 1; i < ttls.size(); ++i) changes += ttls[i] != ttls[i - 1];
    out[3] = static_cast<double>(changes);

    std::array<std::size_t, 5> bins{};
    for (auto t : ttls) {
        if (t <= 1) ++bins[0];
        else if (t <= 100) ++bins[1];
        else if (t <= 300) ++bins[2];
        else if (t <= 900) ++bins[3];
        else ++bins[4];
    }
    for (std::size_t b = 0; b < bins.size(); ++b) out[4 + b] = static_cast<double>(bins[b]) / n;
    return out;
}

std::array<double, 9> ttl_features(const DomainAggregate& agg) {
    std::vector<std::uint32_t> ttls;
    ttls.reserve(agg.ttls.size());
    for (const auto& t : agg.ttls) ttls.push_back(t.value);
    return ttl_features(ttls);
}

// --- name-based -------------------------------------------------------------

std::size_t longest_meaningful_substring(std::string_view label, const AuxiliaryTables& aux) {
    const std::size_t max_len = std::min(label.size(), aux.longest_word);
    for (std::size_t len = max_len; len >= 3; --len)
        for (std::size_t start = 0; start + len <= label.size(); ++start)
            if (aux.dictionary.count(std::string(label.substr(start, len)))) return len;
    return 0;
}

std::array<double, 2> name_features(std::string_view name, const AuxiliaryTables& aux, bool whole_name) {
    auto labels = split_labels(name);
    if (labels.size() < 2) throw Error("SingleLabelDomain", std::string(name));
    std::string label;
    if (whole_name) {
        for (std::size_t i = 0; i + 1 < labels.size(); ++i) label += labels[i];
    } else {
        label = labels[labels.size() - 2];
    }
    std::array<double, 2> out{};
    if (label.empty()) return out;
    const double len = static_cast<double>(label.size());
    auto digits = std::count_if(label.begin(), label.end(), [](char c) { return c >= '0' && c <= '9'; });
    out[0] = static_cast<double>(digits) / len;
    out[1] = static_cast<double>(longest_meaningful_substring(label, aux)) / len;
    return out;
}

// --- assembly ---------------------------------------------------------------

namespace {

FeatureVector assemble(const std::array<double, 7>& t, const std::array<double, 6>& a, const std::array<double, 9>& l,
                       const std::array<double, 2>& n) {
    FeatureVector fv;
    auto it = std::copy(t.begin(), t.end(), fv.values.begin());
    it = std::copy(a.begin(), a.end(), it);
    it = std::copy(l.begin(), l.end(), it);
    std::copy(n.begin(), n.end(), it);
    return fv;
}

} // namespace

FeatureVector extract(const DomainAggregate& agg, const AggregateMap& all_aggs, const AuxiliaryTables& aux,
                      const ExtractParams& params) {
    return assemble(time_features(agg, params.time), answer_features(agg, all_aggs, aux), ttl_features(agg),
                    name_features(agg.name, aux, params.whole_name));
}

std::vector<std::pair<std::string, FeatureVector>> extract_all(const AggregateMap& aggs, const AuxiliaryTables& aux,
                                                               const ExtractParams& params) {
    SharedIpIndex index(aggs);
    std::vector<const DomainAggregate*> order;
    order.reserve(aggs.size());
    for (const auto& [name, agg] : aggs) order.push_back(&agg);

    std::vector<std::pair<std::string, FeatureVector>> out(order.size());
    parallel_for(order.size(), [&](std::size_t i) {
        const auto& agg = *order[i];
        out[i] = {agg.name, assemble(time_features(agg, params.time), answer_features(agg, index, aux),
                                     ttl_features(agg), name_features(agg.name, aux, params.whole_name))};
    });
    return out;
}

// --- auxiliary table parsing --------------------------------------------------

GeoTable parse_geo_csv(std::string_view text) {
    GeoTable geo;
    for (auto [line_no, line] : csv_lines(text)) {
        auto fields = split_csv_line(line);
        if (fields.size() != 2) throw Error("ParseError", "geo line " + std::to_string(line_no) + ": expected 2 fields");
        if (fields[0] == "cidr") continue;
        auto slash = fields[0].find('/');
        if (slash == std::string_view::npos)
            throw Error("ParseError", "geo line " + std::to_string(line_no) + ": missing prefix length");
        auto addr = parse_ipv4(fields[0].substr(0, slash));
        int len = -1;
        auto lenstr = fields[0].substr(slash + 1);
        auto [p, ec] = std::from_chars(lenstr.data(), lenstr.data() + lenstr.size(), len);
        if (!addr || ec != std::errc{} || p != lenstr.data() + lenstr.size() || len < 0 || len > 32)
            throw Error("ParseError", "geo line " + std::to_string(line_no) + ": bad cidr");
        geo.add(*addr, len, std::string(fields[1]));
    }
    return geo;
}

std::unordered_map<std::uint32_t, RdnsEntry> parse_rdns_csv(std::string_view text) {
    std::unordered_map<std::uint32_t, RdnsEntry> table;
    for (auto [line_no, line] : csv_lines(text)) {
        auto fields = split_csv_line(line);
        auto where = "rdns line " + std::to_string(line_no);
        if (fields.size() != 5) throw Error("ParseError", where + ": expected 5 fields");
        if (fields[0] == "ip") continue;
        auto addr = parse_ipv4(fields[0]);
        if (!addr) throw Error("ParseError", where + ": bad address");
        auto flag = [&](std::string_view f) {
            if (f == "0") return false;
            if (f == "1") return true;
            throw Error("ParseError", where + ": boolean must be 0 or 1");
        };
        RdnsEntry entry;
        entry.ptr_name = normalize_name(fields[1]);
        entry.has_a = flag(fields[2]);
        entry.has_ns = flag(fields[3]);
        if (!fields[4].empty()) {
            std::int64_t asn = 0;
            auto [p, ec] = std::from_chars(fields[4].data(), fields[4].data() + fields[4].size(), asn);
            if (ec != std::errc{} || p != fields[4].data() + fields[4].size())
                throw Error("ParseError", where + ": bad asn");
            entry.asn = asn;
        }
        table[*addr] = std::move(entry);
    }
    return table;
}

void parse_dictionary(std::string_view text, AuxiliaryTables& aux) {
    for (auto [line_no, line] : csv_lines(text)) {
        auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t");
        aux.add_word(normalize_name(line.substr(first, last - first + 1)));
    }
}

AuxiliaryTables load_aux(const std::filesystem::path& geo_csv, const std::filesystem::path& rdns_csv,
                         const std::filesystem::path& dictionary) {
    AuxiliaryTables aux;
    aux.geo = parse_geo_csv(read_file(geo_csv));
    aux.rdns = parse_rdns_csv(read_file(rdns_csv));
    parse_dictionary(read_file(dictionary), aux);
    return aux;
}

// --- feature CSV -------------------------------------------------------------

std::string format_feature_csv(std::span<const LabeledFeatures> rows) {
    std::string out;
    for (auto name : feature_names()) {
        out += name;
        out += ',';
    }
    out += "domain,label\n";
    for (const auto& row : rows) {
        for (double v : row.features.values) {
            out += format_double(v);
            out += ',';
        }
        out += row.domain;
        out += ',';
        out += to_string(row.label);
        out += '\n';
    }
    return out;
}

std::vector<LabeledFeatures> parse_feature_csv(std::string_view text) {
    auto lines = csv_lines(text);
    if (lines.empty()) throw Error("ParseError", "feature csv has no header");
    auto header = split_csv_line(lines.front().second);
    if (header.size() != kNumFeatures + 2) throw Error("ParseError", "feature csv header has wrong column count");
    for (std::size_t i = 0; i < kNumFeatures; ++i)
        if (header[i] != feature_names()[i])
            throw Error("ParseError", "feature csv column " + std::to_string(i) + " is '" + std::string(header[i]) + "'");
    if (header[kNumFeatures] != "domain" || header[kNumFeatures + 1] != "label")
        throw Error("ParseError", "feature csv must end with domain,label");

    std::vector<LabeledFeatures> rows;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        auto fields = split_csv_line(lines[l].second);
        if (fields.size() != kNumFeatures + 2)
            throw Error("ParseError", "feature csv line " + std::to_string(lines[l].first) + ": wrong column count");
        LabeledFeatures row;
        for (std::size_t i = 0; i < kNumFeatures; ++i) row.features.values[i] = parse_double(fields[i]);
        row.domain = std::string(fields[kNumFeatures]);
        row.label = parse_label(fields[kNumFeatures + 1]);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace dnsxray
