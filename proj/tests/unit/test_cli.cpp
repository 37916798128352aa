#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <regex>

#include <json.hpp>

#include "dnsxray/commands.hpp"
#include "dnsxray/error.hpp"
#include "dnsxray/features.hpp"
#include "dnsxray/ingest.hpp"
#include "test_util.hpp"

using namespace dnsxray;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CliRun {
    int exit_code = -1;
    std::string output;
};

/// Runs the installed binary with stdout and stderr captured together.
CliRun run_cli(const std::string& args) {
    testing::TempDir tmp;
    const auto log = tmp / "log.txt";
    const std::string cmd = std::string(DNSXRAY_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(log)};
}

fs::path tiny(const std::string& name) { return testing::fixtures() / "tiny" / name; }

ExtractOptions tiny_extract(const fs::path& out) {
    ExtractOptions o;
    o.common.out_dir = out;
    o.traffic = tiny("traffic.pcap");
    o.allow = tiny("allow.txt");
    o.block = tiny("block.txt");
    o.geo = tiny("geo.csv");
    o.rdns = tiny("rdns.csv");
    o.dictionary = tiny("dictionary.txt");
    o.window_start = 1609459200;
    o.window_end = 1609632000;
    return o;
}

/// Feature CSV whose first feature equals the label, plus noise elsewhere.
fs::path separable_csv(const testing::TempDir& dir, std::size_t n = 40) {
    CounterRng rng(2, 2);
    std::vector<LabeledFeatures> rows;
    for (std::size_t i = 0; i < n; ++i) {
        LabeledFeatures lf;
        lf.domain = "d" + std::to_string(i) + ".com";
        lf.label = i % 2 ? Label::MALICIOUS : Label::BENIGN;
        for (auto& v : lf.features.values) v = std::round(rng.uniform() * 100.0) / 100.0;
        lf.features.values[0] = i % 2 ? 1.0 : 0.0;
        lf.features[Feature::num_chars_pct] = 0.1 * static_cast<double>(i % 7);
        rows.push_back(lf);
    }
    const auto path = dir / "sep.csv";
    write_file_atomic(path, format_feature_csv(rows));
    return path;
}

/// Minimal well-formedness check: balanced tags, quoted attributes, only the
/// predefined entities.
bool well_formed_xml(const std::string& doc) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool root_seen = false;
    while (i < doc.size()) {
        if (doc[i] == '&') {
            static const std::regex entity("^&(amp|lt|gt|quot|apos|#[0-9]+|#x[0-9a-fA-F]+);");
            if (!std::regex_search(doc.substr(i, 12), entity)) return false;
            ++i;
            continue;
        }
        if (doc[i] != '<') {
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(doc[i]))) return false;
            ++i;
            continue;
        }
        const auto end = doc.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = doc.substr(i + 1, end - i - 1);
        i = end + 1;
        if (tag.starts_with("?") || tag.starts_with("!--")) continue;
        if (tag.starts_with("/")) {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.ends_with("/");
        if (self_closing) tag.pop_back();
        const auto space = tag.find_first_of(" \t\n");
        const std::string name = tag.substr(0, space);
        if (name.empty()) return false;
        if (space != std::string::npos) {
            static const std::regex attrs(R"(^(\s+[A-Za-z_:][-A-Za-z0-9_:.]*="[^"<]*")*\s*$)");
            if (!std::regex_match(tag.substr(space), attrs)) return false;
        }
        if (stack.empty()) {
            if (root_seen) return false;
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return root_seen && stack.empty();
}

/// Every file of a run directory; the manifest loses its wall-clock and
/// location fields.
std::map<std::string, std::string> artifacts(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        auto text = read_file(e.path());
        if (e.path().filename() == "manifest.json") {
            auto j = json::parse(text);
            j.erase("started");
            j.erase("finished");
            j.erase("out_dir");
            text = j.dump();
        }
        out[e.path().filename().string()] = text;
    }
    return out;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

} // namespace

TEST_CASE("synth writes a full scenario and rejects empty classes") {
    testing::TempDir dir;
    SynthOptions o;
    o.common.out_dir = dir / "run";
    auto m = cmd_synth(o);
    for (const auto* f : {"traffic.jsonl", "truth.csv", "allow.txt", "block.txt", "geo.csv", "rdns.csv",
                          "dictionary.txt", "scenario.json", "manifest.json"})
        CHECK_MESSAGE(fs::exists(dir / "run" / f), f);
    ScenarioConfig defaults;
    CHECK(line_count(read_file(dir / "run" / "truth.csv")) == 1 + defaults.benign_domains + defaults.dga_domains);
    CHECK(m.results["truth_rows"] == defaults.benign_domains + defaults.dga_domains);

    write_file_atomic(dir / "zero.json", R"({"dga_domains": 0})");
    SynthOptions z;
    z.common.out_dir = dir / "zero";
    z.common.config = dir / "zero.json";
    CHECK_THROWS_WITH_AS(cmd_synth(z), doctest::Contains("ConfigInvalid"), Error);
}

TEST_CASE("extract reproduces the golden fixture") {
    testing::TempDir dir;
    cmd_extract(tiny_extract(dir / "a"));
    const auto golden = read_file(tiny("features.golden.csv"));
    CHECK(read_file(dir / "a" / "features.csv") == golden);

    // the records form of the same traffic gives the same table
    auto obs = parse_pcap(tiny("traffic.pcap")).observations;
    write_records(obs, dir / "traffic.jsonl");
    auto o = tiny_extract(dir / "b");
    o.traffic = dir / "traffic.jsonl";
    cmd_extract(o);
    CHECK(read_file(dir / "b" / "features.csv") == golden);
}

TEST_CASE("extract emits only the header when nothing is labeled or resolved") {
    testing::TempDir dir;
    const std::string header = read_file(tiny("features.golden.csv")).substr(0, read_file(tiny("features.golden.csv")).find('\n') + 1);
    write_file_atomic(dir / "empty_allow.txt", "# none\n");
    write_file_atomic(dir / "empty_block.txt", "# none\n");
    auto o = tiny_extract(dir / "unknown");
    o.allow = dir / "empty_allow.txt";
    o.block = dir / "empty_block.txt";
    cmd_extract(o);
    CHECK(read_file(dir / "unknown" / "features.csv") == header);

    std::vector<DnsObservation> nx;
    for (int i = 0; i < 5; ++i) {
        auto obs = testing::a_obs(1609459200 + i, "qcx.nl");
        obs.rcode = RCode::NXDOMAIN;
        nx.push_back(obs);
    }
    write_records(nx, dir / "nx.jsonl");
    auto p = tiny_extract(dir / "nx");
    p.traffic = dir / "nx.jsonl";
    auto m = cmd_extract(p);
    CHECK(read_file(dir / "nx" / "features.csv") == header);
    CHECK(m.results["unresolved_dropped"] == 5);
}

TEST_CASE("extract day filter narrows the window") {
    testing::TempDir dir;
    auto o = tiny_extract(dir / "d2");
    o.day = 2;
    auto m = cmd_extract(o);
    CHECK(m.results["window_start"] == 1609459200 + 86400);
    CHECK(m.results["window_end"] == 1609632000);
    o.common.out_dir = dir / "d3";
    o.day = 3;
    CHECK_THROWS_WITH_AS(cmd_extract(o), doctest::Contains("ConfigInvalid"), Error);
}

TEST_CASE("train records the default forest and grid results") {
    testing::TempDir dir;
    TrainOptions o;
    o.common.out_dir = dir / "rf";
    o.features = tiny("features.golden.csv");
    cmd_train(o);
    auto model = json::parse(read_file(dir / "rf" / "model.json"));
    CHECK(model["kind"] == "random_forest");
    CHECK(model["params"]["n_estimators"] == 125);
    CHECK(model["params"]["criterion"] == "entropy");
    CHECK(model["params"]["max_depth"] == 20);
    CHECK(model["trees"].size() == 125);
    CHECK(fs::exists(dir / "rf" / "holdout.csv"));

    TrainOptions g;
    g.common.out_dir = dir / "grid";
    g.features = separable_csv(dir);
    g.kind = "decision_tree";
    g.grid = R"({"max_depth": [1, 2, 3]})";
    g.folds = 3;
    cmd_train(g);
    auto manifest = json::parse(read_file(dir / "grid" / "manifest.json"));
    REQUIRE(manifest["results"].contains("best_params"));
    CHECK(manifest["results"]["best_params"]["max_depth"] == 1);
    CHECK(line_count(read_file(dir / "grid" / "cv.csv")) == 1 + 3 * 3);
}

TEST_CASE("evaluate scores separable data and overlays models") {
    testing::TempDir dir;
    const auto csv = separable_csv(dir);
    for (const auto* kind : {"decision_tree", "knn"}) {
        TrainOptions t;
        t.common.out_dir = dir / kind;
        t.features = csv;
        t.kind = kind;
        t.holdout = 0;
        t.params = std::string(kind) == "knn" ? R"({"n_neighbors": 3})" : "{}";
        cmd_train(t);
    }
    EvaluateOptions e;
    e.common.out_dir = dir / "eval";
    e.models = {dir / "decision_tree" / "model.json", dir / "knn" / "model.json"};
    e.features = csv;
    cmd_evaluate(e);
    auto metrics = json::parse(read_file(dir / "eval" / "metrics.json"));
    REQUIRE(metrics["models"].size() == 2);
    CHECK(metrics["models"][0]["auc"] == 1.0);
    const auto roc = read_file(dir / "eval" / "roc.csv");
    // both files share the stem "model", so the second curve gets a suffix
    CHECK(roc.find("\nmodel,") != std::string::npos);
    CHECK(roc.find("\nmodel_2,") != std::string::npos);
    CHECK(roc.starts_with("model,threshold,fpr,tpr\n"));
    const auto svg = read_file(dir / "eval" / "roc.svg");
    CHECK(well_formed_xml(svg));
    std::size_t polylines = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
    CHECK(polylines >= 2);
}

TEST_CASE("explain modes honour their interface contracts") {
    testing::TempDir dir;
    const auto csv = separable_csv(dir, 60);
    TrainOptions t;
    t.common.out_dir = dir / "model";
    t.features = csv;
    t.params = R"({"n_estimators": 10})";
    t.holdout = 0;
    cmd_train(t);
    const auto model = dir / "model" / "model.json";

    ExplainOptions f;
    f.common.out_dir = dir / "force_missing";
    f.model = model;
    f.features = csv;
    f.mode = "force";
    f.targets = {"absent.example"};
    f.budget = 256;
    CHECK_THROWS_WITH_AS(cmd_explain(f), doctest::Contains("UnknownDomainTarget"), Error);

    f.common.out_dir = dir / "force";
    f.targets = {"d1.com", "d2.com"};
    cmd_explain(f);
    CHECK(fs::exists(dir / "force" / "force_d1.com.svg"));
    CHECK(well_formed_xml(read_file(dir / "force" / "force_d2.com.svg")));
    CHECK(json::parse(read_file(dir / "force" / "force.json")).size() == 2);

    ExplainOptions s;
    s.common.out_dir = dir / "summary";
    s.model = model;
    s.features = csv;
    s.samples = "all:6";
    s.budget = 256;
    s.top = 24;
    cmd_explain(s);
    const auto svg = read_file(dir / "summary" / "summary.svg");
    CHECK(well_formed_xml(svg));
    for (auto name : feature_names()) CHECK_MESSAGE(svg.find(">" + std::string(name) + "<") != std::string::npos, name);
    CHECK(line_count(read_file(dir / "summary" / "attributions.csv")) == 7);

    ExplainOptions p;
    p.common.out_dir = dir / "pdp";
    p.model = model;
    p.features = csv;
    p.mode = "pdp";
    p.pdp_features = {"num_chars_pct"};
    auto m = cmd_explain(p);
    const auto grid_points = m.results["curves"][0]["grid_points"].get<std::size_t>();
    CHECK(grid_points == 7);
    CHECK(line_count(read_file(dir / "pdp" / "pdp.csv")) == 1 + grid_points);
    CHECK(well_formed_xml(read_file(dir / "pdp" / "pdp_num_chars_pct.svg")));
}

TEST_CASE("pairs draws one chart per pair and tolerates empty tables") {
    testing::TempDir dir;
    PairsOptions o;
    o.common.out_dir = dir / "pairs";
    o.features = tiny("features.golden.csv");
    o.pairs = {"num_chars_pct:pct_of_lms"};
    cmd_pairs(o);
    std::size_t svgs = 0;
    for (const auto& e : fs::directory_iterator(dir / "pairs")) svgs += e.path().extension() == ".svg";
    CHECK(svgs == 1);
    CHECK(well_formed_xml(read_file(dir / "pairs" / "pair_num_chars_pct__pct_of_lms.svg")));

    o.common.out_dir = dir / "bad";
    o.pairs = {"num_chars_pct:nope"};
    CHECK_THROWS_WITH_AS(cmd_pairs(o), doctest::Contains("UnknownFeature"), Error);

    const auto header = read_file(tiny("features.golden.csv")).substr(0, read_file(tiny("features.golden.csv")).find('\n') + 1);
    write_file_atomic(dir / "empty.csv", header);
    auto r = run_cli("pairs --features " + (dir / "empty.csv").string() + " --out " + (dir / "empty").string());
    CHECK(r.exit_code == 0);
    CHECK(well_formed_xml(read_file(dir / "empty" / "pair_num_chars_pct__pct_of_lms.svg")));
}

TEST_CASE("output directories are never overwritten silently") {
    testing::TempDir dir;
    auto o = tiny_extract(dir / "out");
    cmd_extract(o);
    CHECK_THROWS_WITH_AS(cmd_extract(o), doctest::Contains("OutputExists"), Error);
    o.common.force = true;
    CHECK_NOTHROW(cmd_extract(o));
}

TEST_CASE("the binary reports errors on one line with a nonzero exit") {
    testing::TempDir dir;
    std::string csv = read_file(tiny("features.golden.csv"));
    std::string single;
    std::istringstream lines(csv);
    for (std::string line; std::getline(lines, line);)
        if (!line.ends_with(",malicious")) single += line + '\n';
    write_file_atomic(dir / "single.csv", single);

    auto r = run_cli("train --features " + (dir / "single.csv").string() + " --out " + (dir / "t").string());
    CHECK(r.exit_code != 0);
    CHECK(r.output.starts_with("error: SingleClassDataset: "));
    CHECK(line_count(r.output) == 1);

    auto missing = run_cli("explain --model " + tiny("features.golden.csv").string() + " --features " +
                           tiny("features.golden.csv").string() + " --out " + (dir / "x").string());
    CHECK(missing.exit_code == 1);
    CHECK(std::regex_match(missing.output, std::regex("error: [A-Za-z]+: [^\n]*\n")));

    auto ok = run_cli("pairs --features " + tiny("features.golden.csv").string() + " --out " + (dir / "p").string());
    CHECK(ok.exit_code == 0);
}

TEST_CASE("every subcommand is deterministic") {
    testing::TempDir dir;
    write_file_atomic(dir / "scenario.json",
                      R"({"days": 2, "benign_domains": 30, "dga_domains": 30, "unknown_domains": 3})");
    auto twice = [&](auto&& run) {
        run(dir / "a");
        run(dir / "b");
        CHECK(artifacts(dir / "a") == artifacts(dir / "b"));
        fs::remove_all(dir / "a");
        fs::remove_all(dir / "b");
    };
    twice([&](const fs::path& out) {
        SynthOptions o;
        o.common.out_dir = out;
        o.common.config = dir / "scenario.json";
        o.common.seed = 5;
        o.common.seed_given = true;
        o.pcap = true;
        cmd_synth(o);
    });

    SynthOptions s;
    s.common.out_dir = dir / "scn";
    s.common.config = dir / "scenario.json";
    cmd_synth(s);
    twice([&](const fs::path& out) {
        ExtractOptions o;
        o.common.out_dir = out;
        o.traffic = dir / "scn" / "traffic.jsonl";
        o.allow = dir / "scn" / "allow.txt";
        o.block = dir / "scn" / "block.txt";
        o.geo = dir / "scn" / "geo.csv";
        o.rdns = dir / "scn" / "rdns.csv";
        o.dictionary = dir / "scn" / "dictionary.txt";
        cmd_extract(o);
    });

    ExtractOptions e;
    e.common.out_dir = dir / "feat";
    e.traffic = dir / "scn" / "traffic.jsonl";
    e.allow = dir / "scn" / "allow.txt";
    e.block = dir / "scn" / "block.txt";
    e.geo = dir / "scn" / "geo.csv";
    e.rdns = dir / "scn" / "rdns.csv";
    e.dictionary = dir / "scn" / "dictionary.txt";
    cmd_extract(e);
    const auto features = dir / "feat" / "features.csv";
    twice([&](const fs::path& out) {
        TrainOptions o;
        o.common.out_dir = out;
        o.features = features;
        o.grid = R"({"n_estimators": [5, 10], "max_depth": [4]})";
        o.folds = 3;
        o.balance = true;
        cmd_train(o);
    });

    TrainOptions t;
    t.common.out_dir = dir / "model";
    t.features = features;
    t.params = R"({"n_estimators": 10})";
    cmd_train(t);
    const auto model = dir / "model" / "model.json";
    twice([&](const fs::path& out) {
        EvaluateOptions o;
        o.common.out_dir = out;
        o.models = {model};
        o.features = dir / "model" / "holdout.csv";
        cmd_evaluate(o);
    });
    for (const auto* mode : {"summary", "pdp", "force"}) {
        twice([&](const fs::path& out) {
            ExplainOptions o;
            o.common.out_dir = out;
            o.model = model;
            o.features = features;
            o.mode = mode;
            o.samples = "all:4";
            o.budget = 128;
            o.pdp_features = {"ttl_changes", "unique_ips"};
            o.targets = {parse_feature_csv(read_file(features)).front().domain};
            cmd_explain(o);
        });
    }
    twice([&](const fs::path& out) {
        PairsOptions o;
        o.common.out_dir = out;
        o.features = features;
        cmd_pairs(o);
    });
}
