#include "dnsxray/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dnsxray/error.hpp"
#include "dnsxray/ingest.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/parallel.hpp"
#include "dnsxray/rng.hpp"

namespace dnsxray {

namespace {

using json = nlohmann::json;

// Stream tags keep every random decision on its own counter-based stream.
constexpr std::uint64_t kStreamBenignName = 1ull << 40;
constexpr std::uint64_t kStreamDgaName = 2ull << 40;
constexpr std::uint64_t kStreamDgaFamily = 3ull << 40;
constexpr std::uint64_t kStreamUnknownName = 4ull << 40;
constexpr std::uint64_t kStreamBenignTraffic = 5ull << 40;
constexpr std::uint64_t kStreamDgaTraffic = 6ull << 40;
constexpr std::uint64_t kStreamUnknownTraffic = 7ull << 40;
constexpr std::uint64_t kStreamUniverse = 8ull << 40;
constexpr std::uint64_t kStreamNxName = 9ull << 40;
constexpr std::uint64_t kStreamAux = 10ull << 40;

constexpr std::string_view kBenignSuffixes[] = {"com", "org", "net", "io", "de", "it", "nl", "fr", "eu"};
constexpr std::string_view kDgaSuffixes[] = {"pw", "nl", "ru", "info", "biz", "top", "xyz", "cc", "net", "com"};
constexpr std::string_view kShortWords[] = {"my", "go", "get", "the", "app", "web", "hub", "lab", "pro", "one"};
constexpr std::string_view kBenignCountries[] = {"US", "DE", "IT", "NL", "FR", "GB", "IE", "SE"};
constexpr std::string_view kDgaCountries[] = {"US", "RU", "CN", "UA", "RO", "BG", "VN", "BR", "IN", "ID",
                                              "TR", "IR", "KR", "PL", "HK", "SG", "NG", "PK", "TH", "MY",
                                              "AR", "CO", "MX", "ZA", "EG", "KZ", "BY", "MD", "LT", "PA"};

constexpr std::size_t kBenignBlocks = 100;
constexpr std::size_t kBenignHostsPerBlock = 50;
constexpr std::size_t kDgaUniverse = 3000;
constexpr std::size_t kClients = 200;
constexpr std::int64_t kHour = 3600;

template <std::size_t N>
std::string_view pick(CounterRng& rng, const std::string_view (&items)[N]) {
    return items[rng.below(N)];
}

std::string_view pick(CounterRng& rng, std::span<const std::string_view> items) {
    return items[rng.below(items.size())];
}

std::uint32_t benign_address(std::size_t block, std::size_t host) {
    const std::uint32_t a = 23 + static_cast<std::uint32_t>(block % 8);
    const std::uint32_t b = static_cast<std::uint32_t>((block * 7 + 11) % 256);
    const std::uint32_t c = static_cast<std::uint32_t>((block * 13 + 5) % 256);
    return (a << 24) | (b << 16) | (c << 8) | static_cast<std::uint32_t>(host + 1);
}

std::vector<std::uint32_t> dga_universe(std::uint64_t seed) {
    CounterRng rng(seed, kStreamUniverse);
    std::set<std::uint32_t> seen;
    std::vector<std::uint32_t> out;
    while (out.size() < kDgaUniverse) {
        const auto a = static_cast<std::uint32_t>(rng.range(45, 220));
        const auto rest = static_cast<std::uint32_t>(rng.below(1u << 24));
        const std::uint32_t addr = (a << 24) | rest;
        if ((addr & 0xff) == 0 || (addr & 0xff) == 255) continue;
        if (seen.insert(addr).second) out.push_back(addr);
    }
    return out;
}

std::string client_for(CounterRng& rng) {
    const auto c = 1 + rng.below(kClients);
    return "192.168." + std::to_string(c / 256) + '.' + std::to_string(c % 256);
}

std::string benign_name(CounterRng& rng) {
    std::string label(pick(rng, benign_words()));
    const double r = rng.uniform();
    if (r < 0.25)
        label = std::string(pick(rng, kShortWords)) + label;
    else if (r < 0.45)
        label += pick(rng, benign_words());
    if (rng.bernoulli(0.1)) label += std::to_string(rng.range(1, 99));
    return label + '.' + std::string(pick(rng, kBenignSuffixes));
}

std::uint32_t next_ttl(CounterRng& rng, const ClassProfile& profile, double change_rate, std::uint32_t current) {
    if (profile.ttl_values.size() < 2 || !rng.bernoulli(change_rate)) return current;
    std::uint32_t candidate = current;
    while (candidate == current) candidate = profile.ttl_values[rng.below(profile.ttl_values.size())];
    return candidate;
}

double diurnal(const ClassProfile& profile, std::int64_t hour, double phase) {
    const double cycle = std::sin(6.283185307179586 * (static_cast<double>(hour % 24) - phase) / 24.0);
    return std::max(0.0, 1.0 + profile.diurnal_amplitude * cycle);
}

/// (start hour, length in hours) of a domain's activity inside the window.
std::pair<std::int64_t, std::int64_t> active_span(CounterRng& rng, const ClassProfile& profile, std::int64_t total_hours) {
    std::int64_t span = total_hours;
    if (rng.bernoulli(profile.short_lived_fraction))
        span = std::min<std::int64_t>(total_hours, rng.range(1, profile.short_max_hours));
    else if (total_hours > profile.long_min_hours)
        span = rng.range(profile.long_min_hours, total_hours);
    return {rng.range(0, total_hours - span), span};
}

double log_uniform(CounterRng& rng, double lo, double hi) {
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

std::vector<std::uint32_t> distinct_sample(CounterRng& rng, std::span<const std::uint32_t> universe, std::size_t n) {
    std::set<std::uint32_t> chosen;
    std::vector<std::uint32_t> out;
    n = std::min(n, universe.size());
    while (out.size() < n) {
        auto addr = universe[rng.below(universe.size())];
        if (chosen.insert(addr).second) out.push_back(addr);
    }
    return out;
}

DnsObservation a_response(std::int64_t ts, const std::string& name, std::span<const std::uint32_t> ips,
                          std::uint32_t ttl, std::string client) {
    DnsObservation obs;
    obs.timestamp = ts;
    obs.qname = name;
    obs.qtype = QType::A;
    obs.rcode = RCode::NOERROR;
    for (auto ip : ips) obs.answers.push_back({RType::A, ttl, format_ipv4(ip)});
    obs.client_id = std::move(client);
    return obs;
}

std::vector<DnsObservation> benign_trace(const ScenarioConfig& cfg, const std::string& name, std::size_t index,
                                         std::span<const std::uint32_t> universe) {
    const auto& profile = cfg.benign;
    CounterRng rng(cfg.seed, kStreamBenignTraffic + index);
    const double rate = log_uniform(rng, profile.min_rate, profile.max_rate);
    const double phase = rng.uniform(0.0, 24.0);
    const bool no_answer = rng.bernoulli(profile.no_answer_fraction);
    const auto pool = distinct_sample(rng, universe, static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(profile.min_ips), static_cast<std::int64_t>(profile.flux_ips))));
    const double ttl_rate = rng.bernoulli(profile.ttl_dynamic_fraction) ? profile.ttl_change_rate : 0.0;
    std::uint32_t ttl = profile.ttl_values[rng.below(profile.ttl_values.size())];
    const auto [start_hour, span] = active_span(rng, profile, static_cast<std::int64_t>(cfg.days) * 24);

    std::vector<DnsObservation> out;
    auto emit = [&](std::int64_t ts) {
        ttl = next_ttl(rng, profile, ttl_rate, ttl);
        std::vector<std::uint32_t> ips;
        if (!no_answer) {
            // every record of the set, rotated
            const std::size_t first = rng.below(pool.size());
            for (std::size_t j = 0; j < pool.size(); ++j) ips.push_back(pool[(first + j) % pool.size()]);
        }
        out.push_back(a_response(ts, name, ips, ttl, client_for(rng)));
        if (rng.bernoulli(0.01)) {
            DnsObservation ns;
            ns.timestamp = ts;
            ns.qname = name;
            ns.qtype = QType::NS;
            ns.answers.push_back({RType::NS, 86400, "ns1." + name});
            ns.client_id = client_for(rng);
            out.push_back(std::move(ns));
        }
    };
    // every started day of activity sees at least one query
    std::size_t day_queries = 0;
    for (std::int64_t h = 0; h < span; ++h) {
        const std::int64_t hour = start_hour + h;
        const auto n = rng.poisson(rate * diurnal(profile, hour, phase));
        for (std::uint64_t q = 0; q < n; ++q)
            emit(cfg.start_time + hour * kHour + static_cast<std::int64_t>(rng.below(kHour)));
        day_queries += n;
        if ((h + 1) % 24 == 0 || h + 1 == span) {
            if (day_queries == 0)
                emit(cfg.start_time + hour * kHour + static_cast<std::int64_t>(rng.below(kHour)));
            day_queries = 0;
        }
    }
    return out;
}

std::vector<DnsObservation> dga_trace(const ScenarioConfig& cfg, const DgaDomain& domain, std::size_t index,
                                      std::span<const std::uint32_t> universe,
                                      const std::set<std::string, std::less<>>& taken) {
    const auto& profile = cfg.dga;
    CounterRng rng(cfg.seed, kStreamDgaTraffic + index);
    const auto [start_hour, span] = active_span(rng, profile, static_cast<std::int64_t>(cfg.days) * 24);
    const double rate = log_uniform(rng, profile.min_rate, profile.max_rate);
    const double phase = rng.uniform(0.0, 24.0);
    const bool no_answer = rng.bernoulli(profile.no_answer_fraction);
    const auto pool = distinct_sample(rng, universe, static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(profile.min_ips), static_cast<std::int64_t>(profile.flux_ips))));
    const double ttl_rate = rng.bernoulli(profile.ttl_dynamic_fraction) ? profile.ttl_change_rate : 0.0;
    std::uint32_t ttl = profile.ttl_values[rng.below(profile.ttl_values.size())];

    std::vector<DnsObservation> out;
    for (std::int64_t h = 0; h < span; ++h) {
        const std::int64_t hour = start_hour + h;
        auto n = rng.poisson(rate * diurnal(profile, hour, phase));
        if (h == 0 && n == 0) n = 1;
        for (std::uint64_t q = 0; q < n; ++q) {
            ttl = next_ttl(rng, profile, ttl_rate, ttl);
            std::vector<std::uint32_t> ips;
            if (!no_answer) {
                const std::size_t k = 1 + rng.below(3);
                for (std::size_t j = 0; j < k; ++j) ips.push_back(pool[rng.below(pool.size())]);
                std::sort(ips.begin(), ips.end());
                ips.erase(std::unique(ips.begin(), ips.end()), ips.end());
            }
            out.push_back(a_response(cfg.start_time + hour * kHour + static_cast<std::int64_t>(rng.below(kHour)),
                                     domain.name, ips, ttl, client_for(rng)));
        }
    }

    // unregistered siblings from the same generator
    const auto nx = rng.poisson(cfg.dga_nxdomain_rate);
    for (std::uint64_t j = 0; j < nx; ++j) {
        auto name = gen_dga_name(cfg, domain.family, kStreamNxName + index * 64 + j);
        if (taken.count(name)) continue;
        DnsObservation obs;
        obs.timestamp = cfg.start_time + (start_hour + rng.range(0, span - 1)) * kHour +
                        static_cast<std::int64_t>(rng.below(kHour));
        obs.qname = std::move(name);
        obs.rcode = RCode::NXDOMAIN;
        obs.client_id = client_for(rng);
        out.push_back(std::move(obs));
    }
    return out;
}

std::vector<DnsObservation> unknown_trace(const ScenarioConfig& cfg, const std::string& name, std::size_t index,
                                          std::span<const std::uint32_t> universe) {
    CounterRng rng(cfg.seed, kStreamUnknownTraffic + index);
    const auto pool = distinct_sample(rng, universe, 1);
    std::vector<DnsObservation> out;
    const auto n = 1 + rng.poisson(5.0);
    const std::int64_t total = static_cast<std::int64_t>(cfg.days) * 86400;
    for (std::uint64_t q = 0; q < n; ++q)
        out.push_back(a_response(cfg.start_time + rng.range(0, total - 1), name, pool, 600, client_for(rng)));
    return out;
}

DgaFamilyKind family_from_string(std::string_view s) {
    if (s == "alnum_random") return DgaFamilyKind::ALNUM_RANDOM;
    if (s == "numeric_mix") return DgaFamilyKind::NUMERIC_MIX;
    if (s == "wordlist_combo") return DgaFamilyKind::WORDLIST_COMBO;
    throw Error("ConfigInvalid", "unknown DGA family '" + std::string(s) + "'");
}

std::string family_key(DgaFamilyKind k) {
    switch (k) {
    case DgaFamilyKind::ALNUM_RANDOM: return "alnum_random";
    case DgaFamilyKind::NUMERIC_MIX: return "numeric_mix";
    case DgaFamilyKind::WORDLIST_COMBO: return "wordlist_combo";
    }
    return "alnum_random";
}

void apply_profile(const json& j, ClassProfile& p, const char* which) {
    if (!j.is_object()) throw Error("ConfigInvalid", std::string(which) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "ttl_values") p.ttl_values = value.get<std::vector<std::uint32_t>>();
        else if (key == "ttl_change_rate") p.ttl_change_rate = value.get<double>();
        else if (key == "ttl_dynamic_fraction") p.ttl_dynamic_fraction = value.get<double>();
        else if (key == "short_lived_fraction") p.short_lived_fraction = value.get<double>();
        else if (key == "short_max_hours") p.short_max_hours = value.get<int>();
        else if (key == "long_min_hours") p.long_min_hours = value.get<int>();
        else if (key == "min_ips") p.min_ips = value.get<std::size_t>();
        else if (key == "flux_ips") p.flux_ips = value.get<std::size_t>();
        else if (key == "diurnal_amplitude") p.diurnal_amplitude = value.get<double>();
        else if (key == "min_rate") p.min_rate = value.get<double>();
        else if (key == "max_rate") p.max_rate = value.get<double>();
        else if (key == "no_answer_fraction") p.no_answer_fraction = value.get<double>();
        else throw Error("ConfigInvalid", std::string("unknown key ") + which + "." + key);
    }
}

json profile_to_json(const ClassProfile& p) {
    return json{{"ttl_values", p.ttl_values},   {"ttl_change_rate", p.ttl_change_rate},
                {"min_ips", p.min_ips}, {"flux_ips", p.flux_ips}, {"diurnal_amplitude", p.diurnal_amplitude},
                {"min_rate", p.min_rate},       {"max_rate", p.max_rate},
                {"no_answer_fraction", p.no_answer_fraction}, {"ttl_dynamic_fraction", p.ttl_dynamic_fraction},
                {"short_lived_fraction", p.short_lived_fraction}, {"short_max_hours", p.short_max_hours}, {"long_min_hours", p.long_min_hours}};
}

void validate_profile(const ClassProfile& p, const char* which) {
    auto fail = [&](const std::string& why) { throw Error("ConfigInvalid", std::string(which) + ": " + why); };
    if (p.ttl_values.empty()) fail("ttl_values must be non-empty");
    for (auto t : p.ttl_values)
        if (t > kMaxTtl) fail("ttl value exceeds 2^31-1");
    if (p.ttl_change_rate < 0.0 || p.ttl_change_rate > 1.0) fail("ttl_change_rate outside [0, 1]");
    if (p.min_ips < 1 || p.flux_ips < p.min_ips) fail("ips must satisfy 1 <= min_ips <= flux_ips");
    if (p.diurnal_amplitude < 0.0 || p.diurnal_amplitude > 1.0) fail("diurnal_amplitude outside [0, 1]");
    if (!(p.min_rate > 0.0) || p.max_rate < p.min_rate) fail("rates must satisfy 0 < min_rate <= max_rate");
    if (p.no_answer_fraction < 0.0 || p.no_answer_fraction > 1.0) fail("no_answer_fraction outside [0, 1]");
    if (p.ttl_dynamic_fraction < 0.0 || p.ttl_dynamic_fraction > 1.0) fail("ttl_dynamic_fraction outside [0, 1]");
    if (p.short_lived_fraction < 0.0 || p.short_lived_fraction > 1.0) fail("short_lived_fraction outside [0, 1]");
    if (p.short_max_hours < 1 || p.short_max_hours > 95) fail("short_max_hours must be in [1, 95]");
    if (p.long_min_hours < 1) fail("long_min_hours must be >= 1");
}

} // namespace

std::string_view to_string(DgaFamilyKind kind) {
    switch (kind) {
    case DgaFamilyKind::ALNUM_RANDOM: return "ALNUM_RANDOM";
    case DgaFamilyKind::NUMERIC_MIX: return "NUMERIC_MIX";
    case DgaFamilyKind::WORDLIST_COMBO: return "WORDLIST_COMBO";
    }
    return "ALNUM_RANDOM";
}

void validate(const ScenarioConfig& cfg) {
    if (cfg.days < 1) throw Error("ConfigInvalid", "days must be >= 1");
    if (cfg.benign_domains < 1 || cfg.dga_domains < 1)
        throw Error("ConfigInvalid", "benign_domains and dga_domains must be >= 1");
    if (cfg.dga_family_mix.empty()) throw Error("ConfigInvalid", "dga_family_mix is empty");
    double total = 0.0;
    for (const auto& [kind, w] : cfg.dga_family_mix) {
        if (w < 0.0) throw Error("ConfigInvalid", "negative family weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error("ConfigInvalid", "family weights must sum to 1");
    for (const auto& [kind, fam] : cfg.families) {
        if (fam.min_length < 4 || fam.max_length > 63 || fam.min_length > fam.max_length)
            throw Error("ConfigInvalid", "family length range must lie within [4, 63]");
        if (kind != DgaFamilyKind::WORDLIST_COMBO && fam.alphabet.empty())
            throw Error("ConfigInvalid", "family alphabet is empty");
    }
    validate_profile(cfg.benign, "benign");
    validate_profile(cfg.dga, "dga");
}

void apply_config_json(const json& j, ScenarioConfig& cfg) {
    if (!j.is_object()) throw Error("ConfigInvalid", "config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "days") cfg.days = value.get<int>();
            else if (key == "start_time") cfg.start_time = value.get<std::int64_t>();
            else if (key == "benign_domains") cfg.benign_domains = value.get<std::size_t>();
            else if (key == "dga_domains") cfg.dga_domains = value.get<std::size_t>();
            else if (key == "unknown_domains") cfg.unknown_domains = value.get<std::size_t>();
            else if (key == "dga_nxdomain_rate") cfg.dga_nxdomain_rate = value.get<double>();
            else if (key == "dga_family_mix") {
                cfg.dga_family_mix.clear();
                for (const auto& [fam, w] : value.items()) cfg.dga_family_mix[family_from_string(fam)] = w.get<double>();
            } else if (key == "benign") apply_profile(value, cfg.benign, "benign");
            else if (key == "dga") apply_profile(value, cfg.dga, "dga");
            else throw Error("ConfigInvalid", "unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error("ConfigInvalid", e.what());
    }
}

json config_to_json(const ScenarioConfig& cfg) {
    json mix = json::object();
    for (const auto& [kind, w] : cfg.dga_family_mix) mix[family_key(kind)] = w;
    return json{{"seed", cfg.seed},
                {"days", cfg.days},
                {"start_time", cfg.start_time},
                {"benign_domains", cfg.benign_domains},
                {"dga_domains", cfg.dga_domains},
                {"unknown_domains", cfg.unknown_domains},
                {"dga_nxdomain_rate", cfg.dga_nxdomain_rate},
                {"dga_family_mix", mix},
                {"benign", profile_to_json(cfg.benign)},
                {"dga", profile_to_json(cfg.dga)}};
}

std::string gen_dga_name(const ScenarioConfig& cfg, DgaFamilyKind kind, std::uint64_t rng_stream) {
    CounterRng rng(cfg.seed, rng_stream);
    const auto& fam = cfg.families.at(kind);
    std::string label;
    switch (kind) {
    case DgaFamilyKind::ALNUM_RANDOM: {
        const auto len = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(fam.min_length),
                                                            static_cast<std::int64_t>(fam.max_length)));
        for (std::size_t i = 0; i < len; ++i) label += fam.alphabet[rng.below(fam.alphabet.size())];
        break;
    }
    case DgaFamilyKind::NUMERIC_MIX: {
        const auto len = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(fam.min_length),
                                                            static_cast<std::int64_t>(fam.max_length)));
        for (std::size_t i = 0; i < len; ++i)
            label += rng.bernoulli(0.4) ? static_cast<char>('0' + rng.below(10)) : static_cast<char>('a' + rng.below(26));
        auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
        if (std::none_of(label.begin(), label.end(), is_digit))
            label[rng.below(len)] = static_cast<char>('0' + rng.below(10));
        if (std::all_of(label.begin(), label.end(), is_digit))
            label[rng.below(len)] = static_cast<char>('a' + rng.below(26));
        break;
    }
    case DgaFamilyKind::WORDLIST_COMBO: {
        // two words keep the longer one at >= half the label
        for (int attempt = 0; attempt < 64; ++attempt) {
            label = std::string(pick(rng, charter_words())) + std::string(pick(rng, charter_words()));
            if (label.size() >= fam.min_length && label.size() <= fam.max_length) break;
        }
        if (label.size() > fam.max_length) label.resize(fam.max_length);
        break;
    }
    }
    return label + '.' + std::string(pick(rng, kDgaSuffixes));
}

GeneratedDomains gen_domains(const ScenarioConfig& cfg) {
    validate(cfg);
    GeneratedDomains out;
    std::set<std::string, std::less<>> taken;

    for (std::size_t i = 0; i < cfg.benign_domains; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 1000) throw Error("ConfigInvalid", "benign name space exhausted");
            CounterRng rng(cfg.seed, kStreamBenignName + (attempt << 32) + i);
            auto name = benign_name(rng);
            if (taken.insert(name).second) {
                out.benign.push_back(std::move(name));
                break;
            }
        }
    }

    std::vector<std::pair<DgaFamilyKind, double>> mix(cfg.dga_family_mix.begin(), cfg.dga_family_mix.end());
    for (std::size_t i = 0; i < cfg.dga_domains; ++i) {
        CounterRng rng(cfg.seed, kStreamDgaFamily + i);
        double u = rng.uniform();
        DgaFamilyKind kind = mix.back().first;
        for (const auto& [k, w] : mix) {
            if (u < w) {
                kind = k;
                break;
            }
            u -= w;
        }
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt > 1000) throw Error("ConfigInvalid", "DGA name space exhausted");
            auto name = gen_dga_name(cfg, kind, kStreamDgaName + (attempt << 32) + i);
            if (taken.insert(name).second) {
                out.dga.push_back({std::move(name), kind});
                break;
            }
        }
    }

    for (std::size_t i = 0; i < cfg.unknown_domains; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng(cfg.seed, kStreamUnknownName + (attempt << 32) + i);
            auto name = std::string(pick(rng, benign_words())) + std::to_string(rng.range(100, 999)) + ".example";
            if (taken.insert(name).second) {
                out.unknown.push_back(std::move(name));
                break;
            }
        }
    }
    return out;
}

std::vector<DnsObservation> gen_traffic(const ScenarioConfig& cfg, const GeneratedDomains& domains) {
    validate(cfg);
    std::vector<std::uint32_t> benign_universe;
    for (std::size_t b = 0; b < kBenignBlocks; ++b)
        for (std::size_t h = 0; h < kBenignHostsPerBlock; ++h) benign_universe.push_back(benign_address(b, h));
    const auto dga_ips = dga_universe(cfg.seed);

    std::set<std::string, std::less<>> taken(domains.benign.begin(), domains.benign.end());
    for (const auto& d : domains.dga) taken.insert(d.name);
    taken.insert(domains.unknown.begin(), domains.unknown.end());

    const std::size_t nb = domains.benign.size(), nd = domains.dga.size(), nu = domains.unknown.size();
    std::vector<std::vector<DnsObservation>> traces(nb + nd + nu);
    parallel_for(traces.size(), [&](std::size_t i) {
        if (i < nb)
            traces[i] = benign_trace(cfg, domains.benign[i], i, benign_universe);
        else if (i < nb + nd)
            traces[i] = dga_trace(cfg, domains.dga[i - nb], i - nb, dga_ips, taken);
        else
            traces[i] = unknown_trace(cfg, domains.unknown[i - nb - nd], i - nb - nd, benign_universe);
    });

    std::vector<DnsObservation> all;
    std::size_t total = 0;
    for (const auto& t : traces) total += t.size();
    all.reserve(total);
    for (auto& t : traces) std::move(t.begin(), t.end(), std::back_inserter(all));
    std::stable_sort(all.begin(), all.end(), [](const DnsObservation& a, const DnsObservation& b) {
        if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
        return a.qname < b.qname;
    });
    return all;
}

SyntheticAux gen_aux(const ScenarioConfig& cfg, const GeneratedDomains& domains,
                     std::span<const DnsObservation> traffic) {
    (void)domains;
    SyntheticAux aux;
    CounterRng rng(cfg.seed, kStreamAux);

    // geo: benign /24 blocks, DGA /16 prefixes with a tenth left unmapped
    aux.geo_csv = "cidr,country_code\n";
    for (std::size_t b = 0; b < kBenignBlocks; ++b)
        aux.geo_csv += format_ipv4(benign_address(b, 0) & 0xffffff00u) + "/24," +
                       std::string(kBenignCountries[b % std::size(kBenignCountries)]) + '\n';
    std::set<std::uint32_t> dga_prefixes;
    for (auto addr : dga_universe(cfg.seed)) dga_prefixes.insert(addr & 0xffff0000u);
    for (auto prefix : dga_prefixes) {
        CounterRng prng = rng.split(prefix);
        if (prng.bernoulli(0.1)) continue;
        aux.geo_csv += format_ipv4(prefix) + "/16," + std::string(pick(prng, kDgaCountries)) + '\n';
    }

    // rdns snapshot over every address seen in answers
    std::set<std::uint32_t> seen;
    for (const auto& obs : traffic)
        for (const auto& a : obs.answers)
            if (a.rtype == RType::A)
                if (auto addr = parse_ipv4(a.rdata)) seen.insert(*addr);
    aux.rdns_csv = "ip,ptr_name,has_a,has_ns,asn\n";
    for (auto addr : seen) {
        const bool benign_space = (addr >> 24) >= 23 && (addr >> 24) <= 30;
        CounterRng arng = rng.split(0x100000000ull + addr);
        const bool has_a = arng.bernoulli(benign_space ? 0.8 : 0.5);
        const bool has_ns = arng.bernoulli(benign_space ? 0.5 : 0.3);
        const bool has_asn = arng.bernoulli(benign_space ? 0.95 : 0.8);
        std::string ptr;
        if (has_a) {
            ptr = "host-" + format_ipv4(addr);
            std::replace(ptr.begin(), ptr.end(), '.', '-');
            ptr += benign_space ? ".hosting.example" : ".dyn.example";
        }
        aux.rdns_csv += format_ipv4(addr) + ',' + ptr + ',' + (has_a ? "1" : "0") + ',' + (has_ns ? "1" : "0") + ',' +
                        (has_asn ? std::to_string(benign_space ? 16000 + ((addr >> 16) & 0xff) : 40000 + (addr >> 24))
                                 : std::string()) +
                        '\n';
    }

    std::set<std::string_view> words(benign_words().begin(), benign_words().end());
    words.insert(charter_words().begin(), charter_words().end());
    for (auto w : words) {
        aux.dictionary += w;
        aux.dictionary += '\n';
    }
    return aux;
}

SynthSummary write_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir, bool write_pcap_file) {
    auto domains = gen_domains(cfg);
    auto traffic = gen_traffic(cfg, domains);
    auto aux = gen_aux(cfg, domains, traffic);

    std::filesystem::create_directories(dir);
    write_records(traffic, dir / "traffic.jsonl");
    if (write_pcap_file) write_pcap(traffic, dir / "traffic.pcap");

    std::string truth = "domain,label,family\n";
    std::string allow = "# benign domains\n";
    std::string block = "# DGA domains\n";
    for (const auto& name : domains.benign) {
        truth += name + ",benign,\n";
        allow += name + '\n';
    }
    for (const auto& d : domains.dga) {
        truth += d.name + ",malicious," + std::string(to_string(d.family)) + '\n';
        block += d.name + '\n';
    }
    write_file_atomic(dir / "truth.csv", truth);
    write_file_atomic(dir / "allow.txt", allow);
    write_file_atomic(dir / "block.txt", block);
    write_file_atomic(dir / "geo.csv", aux.geo_csv);
    write_file_atomic(dir / "rdns.csv", aux.rdns_csv);
    write_file_atomic(dir / "dictionary.txt", aux.dictionary);
    write_file_atomic(dir / "scenario.json", config_to_json(cfg).dump(2) + '\n');
    return {traffic.size(), domains.benign.size() + domains.dga.size()};
}

} // namespace dnsxray
