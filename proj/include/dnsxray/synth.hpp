#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnsxray/features.hpp"
#include "dnsxray/observation.hpp"

namespace dnsxray {

enum class DgaFamilyKind { ALNUM_RANDOM, NUMERIC_MIX, WORDLIST_COMBO };

std::string_view to_string(DgaFamilyKind kind);

/// Name-generation rule for one DGA family. Word-based families draw from
/// the built-in charter word list.
struct DgaFamily {
    DgaFamilyKind kind = DgaFamilyKind::ALNUM_RANDOM;
    std::size_t min_length = 8;
    std::size_t max_length = 20;
    std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
};

/// Traffic shape of one class.
struct ClassProfile {
    std::vector<std::uint32_t> ttl_values;
    /// per-query probability that the served TTL switches value, for the
    /// share `ttl_dynamic_fraction` of domains; the rest keep one TTL
    double ttl_change_rate = 0.0;
    double ttl_dynamic_fraction = 1.0;
    /// per-domain address set size is uniform in [min_ips, flux_ips]
    std::size_t min_ips = 1;
    std::size_t flux_ips = 1;
    /// relative amplitude of the 24-hour query cycle, in [0, 1]
    double diurnal_amplitude = 0.0;
    /// per-domain hourly query rate is log-uniform in [min_rate, max_rate]
    double min_rate = 1.0;
    double max_rate = 1.0;
    /// share of domains that resolve NOERROR without any A record
    double no_answer_fraction = 0.0;
    /// share of domains active for a burst of 1..short_max_hours hours; the
    /// rest stay active for at least long_min_hours (or the whole window)
    double short_lived_fraction = 0.0;
    int short_max_hours = 48;
    int long_min_hours = 96;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    int days = 7;
    std::int64_t start_time = 1609459200; // 2021-01-01T00:00:00Z
    std::size_t benign_domains = 2000;
    std::size_t dga_domains = 2000;
    /// neither-list domains, exercising the UNKNOWN path
    std::size_t unknown_domains = 40;
    std::map<DgaFamilyKind, double> dga_family_mix = {
        {DgaFamilyKind::ALNUM_RANDOM, 0.4},
        {DgaFamilyKind::NUMERIC_MIX, 0.3},
        {DgaFamilyKind::WORDLIST_COMBO, 0.3},
    };
    std::map<DgaFamilyKind, DgaFamily> families = {
        {DgaFamilyKind::ALNUM_RANDOM, {DgaFamilyKind::ALNUM_RANDOM, 8, 20, "abcdefghijklmnopqrstuvwxyz0123456789"}},
        {DgaFamilyKind::NUMERIC_MIX, {DgaFamilyKind::NUMERIC_MIX, 6, 14, "abcdefghijklmnopqrstuvwxyz0123456789"}},
        {DgaFamilyKind::WORDLIST_COMBO, {DgaFamilyKind::WORDLIST_COMBO, 6, 30, ""}},
    };
    ClassProfile benign{.ttl_values = {60, 300, 3600, 86400},
                        .ttl_change_rate = 0.05,
                        .ttl_dynamic_fraction = 0.15,
                        .min_ips = 2,
                        .flux_ips = 4,
                        .diurnal_amplitude = 0.8,
                        .min_rate = 0.1,
                        .max_rate = 6.0,
                        .no_answer_fraction = 0.05,
                        .short_lived_fraction = 0.25,
                        .short_max_hours = 60};
    ClassProfile dga{.ttl_values = {30, 60, 300, 3600},
                     .ttl_change_rate = 0.3,
                     .ttl_dynamic_fraction = 0.6,
                     .min_ips = 1,
                     .flux_ips = 40,
                     .diurnal_amplitude = 0.2,
                     .min_rate = 0.5,
                     .max_rate = 8.0,
                     .no_answer_fraction = 0.35,
                     .short_lived_fraction = 0.7,
                     .short_max_hours = 60};
    /// mean count of NXDOMAIN lookups for sibling names per DGA domain
    double dga_nxdomain_rate = 2.0;

    std::int64_t window_start() const { return start_time; }
    std::int64_t window_end() const { return start_time + static_cast<std::int64_t>(days) * 86400; }
};

/// Throws ConfigInvalid when counts are zero, weights do not sum to 1, or a
/// family length range leaves [4, 63].
void validate(const ScenarioConfig& cfg);

/// Overlays keys present in `j` onto `cfg`. Unknown keys are rejected.
void apply_config_json(const nlohmann::json& j, ScenarioConfig& cfg);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

struct DgaDomain {
    std::string name;
    DgaFamilyKind family;
};

struct GeneratedDomains {
    std::vector<std::string> benign;
    std::vector<DgaDomain> dga;
    std::vector<std::string> unknown;
};

GeneratedDomains gen_domains(const ScenarioConfig& cfg);

/// One DGA name of the given family drawn from `rng_stream`.
std::string gen_dga_name(const ScenarioConfig& cfg, DgaFamilyKind kind, std::uint64_t rng_stream);

/// Time-ordered observations for every generated domain.
std::vector<DnsObservation> gen_traffic(const ScenarioConfig& cfg, const GeneratedDomains& domains);

/// Built-in vocabularies.
std::span<const std::string_view> benign_words();
std::span<const std::string_view> charter_words();

/// Lookup tables consistent with the generated address plan.
struct SyntheticAux {
    std::string geo_csv;
    std::string rdns_csv;
    std::string dictionary;
};

SyntheticAux gen_aux(const ScenarioConfig& cfg, const GeneratedDomains& domains,
                     std::span<const DnsObservation> traffic);

/// Writes traffic.jsonl (and traffic.pcap when requested), truth.csv,
/// allow.txt, block.txt, geo.csv, rdns.csv and dictionary.txt into dir.
struct SynthSummary {
    std::size_t observations = 0;
    std::size_t truth_rows = 0;
};
SynthSummary write_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir, bool write_pcap_file);

} // namespace dnsxray
