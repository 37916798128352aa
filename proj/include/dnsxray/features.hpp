#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dnsxray/labeling.hpp"
#include "dnsxray/observation.hpp"

namespace dnsxray {

inline constexpr std::size_t kNumFeatures = 24;

/// Canonical feature order. Values index FeatureVector::values.
enum class Feature : std::size_t {
    glob_short_lived,
    glob_life_ratio,
    daily_similarity,
    local_numOf_changes,
    stddev_before_change,
    idle,
    popular,
    unique_ips,
    unique_ccode,
    rev_arec,
    rev_nsrec,
    rev_asnrec,
    shared_ips,
    ttl_avg,
    ttl_stddev,
    unique_ttls,
    ttl_changes,
    ttl_range1,
    ttl_range100,
    ttl_range300,
    ttl_range900,
    ttl_rangeinf,
    num_chars_pct,
    pct_of_lms,
};

const std::array<std::string_view, kNumFeatures>& feature_names();
std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
    double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
    bool operator==(const FeatureVector&) const = default;
};

struct TimedValue {
    std::int64_t timestamp = 0;
    std::uint32_t value = 0;
};

/// Per-domain rollup over a half-open capture window.
struct DomainAggregate {
    std::string name;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    std::vector<std::uint32_t> hourly_counts;
    /// one entry per A answer, ordered by (timestamp, ttl, address)
    std::vector<TimedValue> ips;
    std::vector<TimedValue> ttls;
    std::int64_t first_seen = 0;
    std::int64_t last_seen = 0;
    std::uint64_t total_queries = 0;
};

using AggregateMap = std::map<std::string, DomainAggregate, std::less<>>;

/// Groups A-type observations by qname. Throws ObservationOutOfWindow when a
/// timestamp falls outside [window_start, window_end).
AggregateMap aggregate(std::span<const DnsObservation> observations, std::int64_t window_start,
                       std::int64_t window_end);

struct TimeParams {
    std::int64_t short_life_seconds = 259200;
    /// CUSUM decision threshold and drift, in units of the series stddev
    double cusum_threshold = 5.0;
    double cusum_drift = 0.5;
    std::uint32_t popular_threshold = 10;
};

struct ExtractParams {
    TimeParams time;
    /// use every label except the public suffix instead of the second-level label
    bool whole_name = false;
};

class GeoTable {
public:
    void add(std::uint32_t prefix, int length, std::string country);
    /// Longest-prefix match.
    std::optional<std::string_view> lookup(std::uint32_t addr) const;
    std::size_t size() const;

private:
    std::array<std::unordered_map<std::uint32_t, std::string>, 33> by_length_;
};

struct RdnsEntry {
    std::string ptr_name;
    bool has_a = false;
    bool has_ns = false;
    std::optional<std::int64_t> asn;
};

struct AuxiliaryTables {
    GeoTable geo;
    std::unordered_map<std::uint32_t, RdnsEntry> rdns;
    std::unordered_set<std::string> dictionary;
    std::size_t longest_word = 0;

    void add_word(std::string word);
};

GeoTable parse_geo_csv(std::string_view text);
std::unordered_map<std::uint32_t, RdnsEntry> parse_rdns_csv(std::string_view text);
/// Words shorter than 3 characters are ignored.
void parse_dictionary(std::string_view text, AuxiliaryTables& aux);
AuxiliaryTables load_aux(const std::filesystem::path& geo_csv, const std::filesystem::path& rdns_csv,
                         const std::filesystem::path& dictionary);

/// Two-sided CUSUM against the running mean of the current segment. Returns
/// the onset index of each detected change.
std::vector<std::size_t> cusum_change_points(std::span<const double> series, double threshold_sigmas,
                                             double drift_sigmas);

/// glob_short_lived .. popular
std::array<double, 7> time_features(const DomainAggregate& agg, const TimeParams& params = {});

/// unique_ips .. shared_ips; shared_ips scans all_aggs directly.
std::array<double, 6> answer_features(const DomainAggregate& agg, const AggregateMap& all_aggs,
                                      const AuxiliaryTables& aux);

/// Inverted address index so shared_ips costs one lookup per address.
class SharedIpIndex {
public:
    explicit SharedIpIndex(const AggregateMap& aggs);
    std::size_t shared_with(const DomainAggregate& agg) const;

private:
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> domains_by_ip_;
    std::unordered_map<std::string_view, std::size_t> id_;
};

std::array<double, 6> answer_features(const DomainAggregate& agg, const SharedIpIndex& index,
                                      const AuxiliaryTables& aux);

/// ttl_avg .. ttl_rangeinf
std::array<double, 9> ttl_features(std::span<const std::uint32_t> ttls);
std::array<double, 9> ttl_features(const DomainAggregate& agg);

/// num_chars_pct, pct_of_lms. Throws SingleLabelDomain.
std::array<double, 2> name_features(std::string_view name, const AuxiliaryTables& aux, bool whole_name = false);

/// Length of the longest substring of `label` (at least 3 characters) that is
/// a dictionary word; 0 if none.
std::size_t longest_meaningful_substring(std::string_view label, const AuxiliaryTables& aux);

FeatureVector extract(const DomainAggregate& agg, const AggregateMap& all_aggs, const AuxiliaryTables& aux,
                      const ExtractParams& params = {});

/// Extracts every aggregate, in map order, sharing one address index.
std::vector<std::pair<std::string, FeatureVector>> extract_all(const AggregateMap& aggs,
                                                               const AuxiliaryTables& aux,
                                                               const ExtractParams& params = {});

struct LabeledFeatures {
    std::string domain;
    Label label = Label::UNKNOWN;
    FeatureVector features;
};

/// Header: the 24 canonical names, then "domain" and "label".
std::string format_feature_csv(std::span<const LabeledFeatures> rows);
std::vector<LabeledFeatures> parse_feature_csv(std::string_view text);

} // namespace dnsxray
