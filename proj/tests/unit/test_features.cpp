#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dnsxray/error.hpp"
#include "dnsxray/features.hpp"
#include "test_util.hpp"

using namespace dnsxray;
using doctest::Approx;

namespace {

constexpr std::int64_t kDay = 86400;

DomainAggregate agg_from_counts(std::vector<std::uint32_t> counts) {
    DomainAggregate agg;
    agg.name = "qcx.nl";
    agg.window_start = 0;
    agg.window_end = static_cast<std::int64_t>(counts.size()) * 3600;
    agg.hourly_counts = std::move(counts);
    std::size_t first = 0, last = 0;
    bool any = false;
    for (std::size_t i = 0; i < agg.hourly_counts.size(); ++i)
        if (agg.hourly_counts[i] > 0) {
            if (!any) first = i;
            last = i;
            any = true;
        }
    agg.first_seen = static_cast<std::int64_t>(first) * 3600;
    agg.last_seen = static_cast<std::int64_t>(last) * 3600 + 1800;
    return agg;
}

double feature(const std::array<double, 7>& t, Feature f) { return t[static_cast<std::size_t>(f)]; }

AuxiliaryTables dictionary(std::initializer_list<const char*> words) {
    AuxiliaryTables aux;
    for (auto w : words) aux.add_word(w);
    return aux;
}

std::vector<double> as_doubles(const std::vector<int>& xs) { return {xs.begin(), xs.end()}; }

/// Three level shifts with low-count noise; reference change points 30, 50, 80.
const std::vector<int> kNoisy{
    1,  1,  0,  2,  0,  0,  0,  0,  1,  2,  0,  2,  0,  0,  0,  0,  2,  1,  0,  2,  0,  0,  0,  2,
    0,  0,  0,  0,  0,  0,  40, 40, 41, 41, 40, 40, 40, 40, 42, 41, 40, 41, 42, 40, 40, 41, 40, 41,
    41, 40, 1,  0,  1,  1,  1,  2,  1,  0,  2,  2,  0,  0,  1,  0,  1,  2,  0,  2,  1,  2,  0,  2,
    0,  0,  0,  0,  0,  2,  1,  1,  16, 17, 15, 16, 16, 15, 17, 15, 15, 16, 16, 15, 16, 16, 15, 16,
    16, 16, 15, 15, 0,  1,  2,  0,  0,  0,  2,  0,  0,  1,  1,  2,  2,  0,  0,  0,  2,  1,  0,  0};

} // namespace

TEST_CASE("there are 24 features, nine of them TTL-based") {
    const auto& names = feature_names();
    CHECK(names.size() == 24);
    CHECK(std::count_if(names.begin(), names.end(), [](auto n) { return n.substr(0, 4) == "ttl_" || n == "unique_ttls"; }) == 9);
    CHECK(names.front() == "glob_short_lived");
    CHECK(names.back() == "pct_of_lms");
    CHECK(feature_index("unique_ips") == static_cast<std::size_t>(Feature::unique_ips));
    CHECK_FALSE(feature_index("nope"));
}

TEST_CASE("aggregation bins by hour over a half-open window") {
    std::vector<DnsObservation> obs{testing::a_obs(0, "qcx.nl"), testing::a_obs(10, "qcx.nl"),
                                    testing::a_obs(3601, "qcx.nl"), testing::a_obs(50, "szx.pw")};
    auto aggs = aggregate(obs, 0, 7200);
    CHECK(aggs.size() == 2);
    const auto& a = aggs.at("qcx.nl");
    CHECK(a.hourly_counts == std::vector<std::uint32_t>{2, 1});
    CHECK(a.first_seen == 0);
    CHECK(a.last_seen == 3601);
    CHECK(a.total_queries == 3);

    std::vector<DnsObservation> late{testing::a_obs(7200, "qcx.nl")};
    CHECK_THROWS_WITH_AS(aggregate(late, 0, 7200), doctest::Contains("ObservationOutOfWindow"), Error);
}

TEST_CASE("aggregation keeps A queries and orders answers by time") {
    auto ns = testing::a_obs(5, "qcx.nl");
    ns.qtype = QType::NS;
    std::vector<DnsObservation> obs{testing::a_obs(20, "qcx.nl", {{60, "1.1.1.1"}}), ns,
                                    testing::a_obs(10, "qcx.nl", {{30, "2.2.2.2"}, {30, "1.1.1.1"}})};
    auto aggs = aggregate(obs, 0, 3600);
    const auto& a = aggs.at("qcx.nl");
    CHECK(a.total_queries == 2);
    REQUIRE(a.ttls.size() == 3);
    CHECK(a.ttls[0].timestamp == 10);
    CHECK(a.ttls[2].value == 60);
    CHECK(a.ips.size() == a.ttls.size());
    CHECK(std::accumulate(a.hourly_counts.begin(), a.hourly_counts.end(), 0u) == a.total_queries);
}

TEST_CASE("constant counts give no changes, no idle hours and no similarity") {
    auto t = time_features(agg_from_counts({5, 5, 5, 5}));
    CHECK(feature(t, Feature::local_numOf_changes) == 0);
    CHECK(feature(t, Feature::idle) == 0);
    CHECK(feature(t, Feature::daily_similarity) == 0);
    CHECK(feature(t, Feature::glob_short_lived) == 1);
}

TEST_CASE("identical days are perfectly similar") {
    std::vector<std::uint32_t> day(24, 0);
    for (std::size_t h = 8; h < 20; ++h) day[h] = static_cast<std::uint32_t>(h);
    std::vector<std::uint32_t> counts = day;
    counts.insert(counts.end(), day.begin(), day.end());
    auto t = time_features(agg_from_counts(counts));
    CHECK(feature(t, Feature::daily_similarity) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("short life and life ratio") {
    DomainAggregate agg = agg_from_counts(std::vector<std::uint32_t>(24 * 7, 1));
    agg.first_seen = 0;
    agg.last_seen = 3 * kDay - 1;
    auto t = time_features(agg);
    CHECK(feature(t, Feature::glob_short_lived) == 1);
    CHECK(feature(t, Feature::glob_life_ratio) == Approx((3.0 * kDay - 1 + 3600) / (7.0 * kDay)));
    agg.last_seen = 3 * kDay;
    CHECK(feature(time_features(agg), Feature::glob_short_lived) == 0);
    agg.last_seen = 7 * kDay - 1;
    CHECK(feature(time_features(agg), Feature::glob_life_ratio) == 1.0);
}

TEST_CASE("idle and popular fractions over the active span") {
    auto agg = agg_from_counts({0, 3, 0, 12, 0, 10, 0});
    auto t = time_features(agg);
    CHECK(feature(t, Feature::idle) == Approx(2.0 / 5.0));
    CHECK(feature(t, Feature::popular) == Approx(2.0 / 5.0));
}

TEST_CASE("CUSUM change points match the reference script") {
    std::vector<int> step(24, 0), up(24, 100);
    step.insert(step.end(), up.begin(), up.end());
    CHECK(cusum_change_points(as_doubles(step), 5.0, 0.5) == std::vector<std::size_t>{24});

    std::vector<int> two(72, 0);
    std::fill(two.begin() + 24, two.begin() + 48, 50);
    CHECK(cusum_change_points(as_doubles(two), 5.0, 0.5) == std::vector<std::size_t>{24, 48});

    std::vector<int> spike(61, 1);
    spike[30] = 200;
    CHECK(cusum_change_points(as_doubles(spike), 5.0, 0.5) == std::vector<std::size_t>{30, 31});

    CHECK(cusum_change_points(as_doubles({5, 5, 5, 5}), 5.0, 0.5).empty());
    CHECK(cusum_change_points(as_doubles({7}), 5.0, 0.5).empty());

    CHECK(cusum_change_points(as_doubles(kNoisy), 5.0, 0.5) == std::vector<std::size_t>{30, 50, 80});
}

TEST_CASE("change-point count and gap spread feed the time features") {
    std::vector<std::uint32_t> step(24, 0), up(24, 100);
    step.insert(step.end(), up.begin(), up.end());
    auto t = time_features(agg_from_counts(step));
    CHECK(feature(t, Feature::local_numOf_changes) == 1);
    CHECK(feature(t, Feature::stddev_before_change) == 0);

    auto t3 = time_features(agg_from_counts({kNoisy.begin(), kNoisy.end()}));
    CHECK(feature(t3, Feature::local_numOf_changes) == 3);
    CHECK(feature(t3, Feature::stddev_before_change) == 5.0);
}

TEST_CASE("answer features count addresses, countries and reverse records") {
    AggregateMap aggs;
    std::vector<DnsObservation> obs{
        testing::a_obs(1, "a.com", {{60, "1.2.3.4"}, {60, "1.2.3.4"}, {60, "5.6.7.8"}}),
        testing::a_obs(2, "b.com", {{60, "5.6.7.8"}}),
        testing::a_obs(3, "c.com", {{60, "9.9.9.9"}}),
        testing::a_obs(4, "d.com"),
    };
    aggs = aggregate(obs, 0, 3600);
    AuxiliaryTables aux;
    auto a = answer_features(aggs.at("a.com"), aggs, aux);
    CHECK(a[0] == 2);
    CHECK(a[1] == 1);
    CHECK(a[2] == 0);
    CHECK(a[3] == 0);
    CHECK(a[4] == 0);
    CHECK(a[5] == 1);
    CHECK(answer_features(aggs.at("b.com"), aggs, aux)[5] == 1);
    CHECK(answer_features(aggs.at("c.com"), aggs, aux)[5] == 0);
    auto none = answer_features(aggs.at("d.com"), aggs, aux);
    CHECK(none == std::array<double, 6>{});

    aux.geo = parse_geo_csv("cidr,country_code\n1.0.0.0/8,AA\n1.2.0.0/16,BB\n");
    aux.rdns = parse_rdns_csv("ip,ptr_name,has_a,has_ns,asn\n1.2.3.4,h.example,1,0,64500\n5.6.7.8,,0,1,\n");
    auto b = answer_features(aggs.at("a.com"), aggs, aux);
    CHECK(b[1] == 2);
    CHECK(b[2] == 0.5);
    CHECK(b[3] == 0.5);
    CHECK(b[4] == 0.5);
}

TEST_CASE("indexed shared_ips agrees with the direct scan and is symmetric") {
    CounterRng rng(4, 4);
    std::vector<DnsObservation> obs;
    for (int i = 0; i < 400; ++i) {
        auto o = testing::a_obs(i, "d" + std::to_string(rng.below(60)) + ".com");
        const auto n = rng.below(3);
        for (std::uint64_t k = 0; k < n; ++k) o.answers.push_back({RType::A, 60, "10.0.0." + std::to_string(rng.below(80))});
        obs.push_back(o);
    }
    auto aggs = aggregate(obs, 0, 3600);
    SharedIpIndex index(aggs);
    AuxiliaryTables aux;
    for (const auto& [name, agg] : aggs) {
        CHECK(index.shared_with(agg) == answer_features(agg, aggs, aux)[5]);
        std::set<std::uint32_t> mine;
        for (auto ip : agg.ips) mine.insert(ip.value);
        for (const auto& [other_name, other] : aggs) {
            if (other_name == name) continue;
            bool shares = false;
            for (auto ip : other.ips) shares = shares || mine.count(ip.value);
            if (shares) CHECK(index.shared_with(other) >= 1);
        }
    }
}

TEST_CASE("geo lookup prefers the longest prefix") {
    auto geo = parse_geo_csv("cidr,country_code\n10.0.0.0/8,ZZ\n10.1.0.0/16,YY\n10.1.2.0/24,XX\n");
    CHECK(geo.lookup(*parse_ipv4("10.1.2.3")) == "XX");
    CHECK(geo.lookup(*parse_ipv4("10.1.9.9")) == "YY");
    CHECK(geo.lookup(*parse_ipv4("10.9.9.9")) == "ZZ");
    CHECK_FALSE(geo.lookup(*parse_ipv4("11.0.0.1")));
    CHECK_THROWS_AS(parse_geo_csv("10.0.0.0,ZZ\n"), Error);
    CHECK_THROWS_AS(parse_rdns_csv("1.2.3.4,x,2,0,\n"), Error);
}

TEST_CASE("TTL features on worked lists") {
    const std::vector<std::uint32_t> a{0, 50, 50, 600};
    auto t = ttl_features(a);
    CHECK(t[0] == 175);
    CHECK(t[2] == 3);
    CHECK(t[3] == 2);
    CHECK(t[4] == 0.25);
    CHECK(t[5] == 0.5);
    CHECK(t[6] == 0);
    CHECK(t[7] == 0.25);
    CHECK(t[8] == 0);

    const std::vector<std::uint32_t> single{300};
    auto s = ttl_features(single);
    CHECK(s[1] == 0);
    CHECK(s[3] == 0);
    CHECK(s[6] == 1);

    const std::vector<std::uint32_t> flat{60, 60, 60};
    auto f = ttl_features(flat);
    CHECK(f[2] == 1);
    CHECK(f[3] == 0);
    CHECK(f[5] == 1.0);

    CHECK(ttl_features(std::span<const std::uint32_t>{}) == std::array<double, 9>{});
}

TEST_CASE("TTL bin edges") {
    for (auto [ttl, bin] : std::vector<std::pair<std::uint32_t, int>>{
             {0, 0}, {1, 0}, {2, 1}, {100, 1}, {101, 2}, {300, 2}, {301, 3}, {900, 3}, {901, 4}, {kMaxTtl, 4}}) {
        const std::vector<std::uint32_t> one{ttl};
        CHECK(ttl_features(one)[4 + static_cast<std::size_t>(bin)] == 1.0);
    }
}

TEST_CASE("TTL range fractions sum to one on random lists") {
    CounterRng rng(9, 9);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::uint32_t> ttls(1 + rng.below(200));
        for (auto& t : ttls) t = static_cast<std::uint32_t>(rng.below(rng.bernoulli(0.5) ? 1200 : kMaxTtl + 1ull));
        auto f = ttl_features(ttls);
        CHECK(std::abs(f[4] + f[5] + f[6] + f[7] + f[8] - 1.0) <= 1e-9);
    }
}

TEST_CASE("name features on the second-level label") {
    auto any = dictionary({"eleven", "top"});
    CHECK(name_features("abc123.com", any)[0] == 0.5);
    CHECK(name_features("topeleven.com", any)[1] == Approx(6.0 / 9.0));
    CHECK(name_features("www.topeleven.com", any)[1] == Approx(6.0 / 9.0));
    CHECK(name_features("xk9q2.pw", dictionary({"xk", "abc", "q2x"}))[1] == 0);
    CHECK_THROWS_WITH_AS(name_features("localhost", any), doctest::Contains("SingleLabelDomain"), Error);
    auto whole = name_features("top.eleven99.com", any, true);
    CHECK(whole[0] == Approx(2.0 / 11.0));
    CHECK(whole[1] == Approx(6.0 / 11.0));
}

TEST_CASE("dictionary ignores words shorter than three characters") {
    AuxiliaryTables aux;
    parse_dictionary("ab\n# note\n  Cat \nx\n", aux);
    CHECK(aux.dictionary.size() == 1);
    CHECK(aux.dictionary.count("cat"));
    CHECK(longest_meaningful_substring("abcat", aux) == 3);
}

TEST_CASE("extract assembles 24 values with empty-TTL ranges at zero") {
    std::vector<DnsObservation> obs{testing::a_obs(10, "qcx.nl"), testing::a_obs(20, "qcx.nl")};
    auto aggs = aggregate(obs, 0, kDay);
    AuxiliaryTables aux;
    auto fv = extract(aggs.at("qcx.nl"), aggs, aux);
    CHECK(fv.values.size() == 24);
    for (auto f : {Feature::ttl_range1, Feature::ttl_range100, Feature::ttl_range300, Feature::ttl_range900,
                   Feature::ttl_rangeinf})
        CHECK(fv[f] == 0);
    auto all = extract_all(aggs, aux);
    REQUIRE(all.size() == 1);
    CHECK(all[0].second == fv);
}

TEST_CASE("feature vectors do not depend on arrival order within a timestamp") {
    CounterRng rng(21, 2);
    std::vector<DnsObservation> obs;
    for (int i = 0; i < 600; ++i) {
        auto o = testing::a_obs(static_cast<std::int64_t>(rng.below(40)) * 900, "d" + std::to_string(rng.below(12)) + ".com",
                                {{static_cast<std::uint32_t>(rng.below(4) * 100), "10.0.0." + std::to_string(rng.below(30))}});
        obs.push_back(o);
    }
    std::stable_sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    auto shuffled = obs;
    for (std::size_t i = 0; i < shuffled.size();) {
        std::size_t j = i;
        while (j < shuffled.size() && shuffled[j].timestamp == shuffled[i].timestamp) ++j;
        std::vector<DnsObservation> group(shuffled.begin() + static_cast<std::ptrdiff_t>(i),
                                          shuffled.begin() + static_cast<std::ptrdiff_t>(j));
        rng.shuffle(group);
        std::copy(group.begin(), group.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(i));
        i = j;
    }
    AuxiliaryTables aux;
    CHECK(extract_all(aggregate(obs, 0, 40 * 900), aux) == extract_all(aggregate(shuffled, 0, 40 * 900), aux));
}

TEST_CASE("scaling counts keeps idle and cannot lower popular") {
    CounterRng rng(3, 3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint32_t> counts(72);
        for (auto& c : counts) c = rng.bernoulli(0.4) ? 0 : static_cast<std::uint32_t>(rng.below(15));
        counts[rng.below(72)] = 1;
        auto scaled = counts;
        const auto factor = static_cast<std::uint32_t>(2 + rng.below(5));
        for (auto& c : scaled) c *= factor;
        auto base = time_features(agg_from_counts(counts));
        auto big = time_features(agg_from_counts(scaled));
        CHECK(feature(big, Feature::idle) == feature(base, Feature::idle));
        CHECK(feature(big, Feature::popular) >= feature(base, Feature::popular));
        CHECK(feature(base, Feature::daily_similarity) >= 0.0);
        CHECK(feature(base, Feature::daily_similarity) <= 1.0 + 1e-12);
    }
}

TEST_CASE("feature CSV round-trips") {
    LabeledFeatures row;
    row.domain = "qcx.nl";
    row.label = Label::MALICIOUS;
    for (std::size_t i = 0; i < kNumFeatures; ++i) row.features.values[i] = 0.1 * static_cast<double>(i) + 1e-7;
    std::vector<LabeledFeatures> rows{row};
    auto text = format_feature_csv(rows);
    auto back = parse_feature_csv(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].features == row.features);
    CHECK(back[0].domain == "qcx.nl");
    CHECK(back[0].label == Label::MALICIOUS);
    CHECK(format_feature_csv({}) .find('\n') == text.find('\n'));
    CHECK_THROWS_AS(parse_feature_csv("a,b\n"), Error);
}
