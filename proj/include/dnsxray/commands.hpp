#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dnsxray {

inline constexpr const char* kToolVersion = "0.1.0";

/// Flags shared by every subcommand.
struct CommonOptions {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> config;
    bool force = false;
};

/// Run record written as manifest.json at the end of a successful command.
struct RunManifest {
    std::string subcommand;
    std::vector<std::string> inputs;
    std::string config;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string started;
    std::string finished;
    /// subcommand-specific results (counts, best params, AUCs)
    nlohmann::json results = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Creates the directory. Throws OutputExists when it already holds files
/// and `force` is false.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// UTC ISO-8601 timestamp of the current time.
std::string utc_now();

struct SynthOptions {
    CommonOptions common;
    bool pcap = false;
};

struct ExtractOptions {
    CommonOptions common;
    std::filesystem::path traffic;
    std::filesystem::path allow;
    std::filesystem::path block;
    std::optional<std::filesystem::path> geo;
    std::optional<std::filesystem::path> rdns;
    std::optional<std::filesystem::path> dictionary;
    std::optional<std::int64_t> window_start;
    std::optional<std::int64_t> window_end;
    /// 1-based calendar day inside the window
    std::optional<int> day;
    bool whole_name = false;
};

struct TrainOptions {
    CommonOptions common;
    std::filesystem::path features;
    std::string kind = "random_forest";
    /// JSON object text or path to a JSON file
    std::optional<std::string> params;
    std::optional<std::string> grid;
    std::size_t folds = 5;
    bool balance = false;
    /// share of rows held out (written as holdout.csv); 0 trains on everything
    double holdout = 0.3;
};

struct EvaluateOptions {
    CommonOptions common;
    std::vector<std::filesystem::path> models;
    std::filesystem::path features;
};

struct ExplainOptions {
    CommonOptions common;
    std::filesystem::path model;
    std::filesystem::path features;
    std::string mode = "summary";
    std::vector<std::string> targets;
    std::vector<std::string> pdp_features;
    std::optional<std::string> background;
    std::string samples = "all:100";
    std::size_t budget = 2048;
    std::size_t top = 20;
    std::size_t grid_size = 20;
};

struct PairsOptions {
    CommonOptions common;
    std::filesystem::path features;
    /// "feature_a:feature_b" entries
    std::vector<std::string> pairs;
};

RunManifest cmd_synth(const SynthOptions& opts);
RunManifest cmd_extract(const ExtractOptions& opts);
RunManifest cmd_train(const TrainOptions& opts);
RunManifest cmd_evaluate(const EvaluateOptions& opts);
RunManifest cmd_explain(const ExplainOptions& opts);
RunManifest cmd_pairs(const PairsOptions& opts);

/// Stamps the finish time and writes manifest.json into the output directory.
void write_manifest(RunManifest& manifest, const std::filesystem::path& out_dir);

} // namespace dnsxray
