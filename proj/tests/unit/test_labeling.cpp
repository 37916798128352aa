#include <doctest.h>

#include "dnsxray/error.hpp"
#include "dnsxray/labeling.hpp"
#include "test_util.hpp"

using namespace dnsxray;

namespace {

DomainLists lists_of(std::set<std::string> allow, std::set<std::string> block) {
    DomainLists lists;
    lists.allow = std::move(allow);
    lists.block = std::move(block);
    return lists;
}

} // namespace

TEST_CASE("list entries are case-folded and deduplicated") {
    auto allow = parse_domain_list("Spring.IO\n# comment\nspring.io\n\n");
    CHECK(allow == std::set<std::string>{"spring.io"});
    CHECK(parse_domain_list("qcx.nl\nszx.pw\n").size() == 2);
}

TEST_CASE("list entries lose surrounding dots and bad entries warn") {
    std::vector<std::string> warnings;
    auto set = parse_domain_list(".a.com.\nbad entry\r\n  b.com  \n", &warnings);
    CHECK(set == std::set<std::string>{"a.com", "b.com"});
    CHECK(warnings.size() == 1);
}

TEST_CASE("load_lists reads files and flags empty lists") {
    testing::TempDir dir;
    write_file_atomic(dir / "allow.txt", "Spring.IO\n# comment\nspring.io\n");
    write_file_atomic(dir / "block.txt", "# nothing\n");
    auto lists = load_lists(dir / "allow.txt", dir / "block.txt");
    CHECK(lists.allow.size() == 1);
    CHECK(lists.block.empty());
    REQUIRE(lists.warnings.size() == 1);
    CHECK(lists.warnings[0].find("EmptyList") == 0);
    CHECK_THROWS_WITH_AS(load_lists(dir / "missing.txt", dir / "block.txt"), doctest::Contains("FileUnreadable"),
                         Error);
}

TEST_CASE("labels follow suffix matching with blocklist precedence") {
    auto lists = lists_of({"spring.io", "qcx.nl"}, {"qcx.nl"});
    CHECK(label_domain("www.spring.io", lists) == Label::BENIGN);
    CHECK(label_domain("spring.io", lists) == Label::BENIGN);
    CHECK(label_domain("qcx.nl", lists) == Label::MALICIOUS);
    CHECK(label_domain("a.qcx.nl", lists) == Label::MALICIOUS);
    CHECK(label_domain("example.test", lists) == Label::UNKNOWN);
    CHECK(label_domain("myspring.io", lists) == Label::UNKNOWN);
}

TEST_CASE("a top-level entry covers every name below it") {
    auto lists = lists_of({"com"}, {});
    CHECK(label_domain("a.b.c.com", lists) == Label::BENIGN);
    CHECK(label_domain("a.b.c.net", lists) == Label::UNKNOWN);
}

TEST_CASE("adding block entries never clears a malicious verdict") {
    CounterRng rng(5, 1);
    std::vector<std::string> names;
    for (int i = 0; i < 300; ++i) names.push_back(testing::random_name(rng));
    auto lists = lists_of({}, {});
    for (int i = 0; i < 40; ++i) lists.allow.insert(names[rng.below(names.size())]);
    for (int i = 0; i < 20; ++i) lists.block.insert(names[rng.below(names.size())]);
    std::vector<Label> before;
    for (const auto& n : names) before.push_back(label_domain(n, lists));
    for (int i = 0; i < 60; ++i) lists.block.insert(names[rng.below(names.size())]);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (before[i] == Label::MALICIOUS) CHECK(label_domain(names[i], lists) == Label::MALICIOUS);
        CHECK(label_domain(names[i], lists) == label_domain(names[i], lists));
    }
}

TEST_CASE("day-twelve proportions label exactly") {
    auto lists = lists_of({}, {});
    std::vector<std::string> names;
    for (int i = 0; i < 6925; ++i) {
        names.push_back("benign" + std::to_string(i) + ".com");
        lists.allow.insert(names.back());
    }
    for (int i = 0; i < 1324; ++i) {
        names.push_back("dga" + std::to_string(i) + ".pw");
        lists.block.insert(names.back());
    }
    std::size_t benign = 0, malicious = 0;
    for (const auto& n : names) {
        auto l = label_domain(n, lists);
        benign += l == Label::BENIGN;
        malicious += l == Label::MALICIOUS;
    }
    CHECK(benign == 6925);
    CHECK(malicious == 1324);
}

TEST_CASE("label text round-trips") {
    for (auto l : {Label::BENIGN, Label::MALICIOUS, Label::UNKNOWN}) CHECK(parse_label(to_string(l)) == l);
    CHECK_THROWS_AS(parse_label("evil"), Error);
}
