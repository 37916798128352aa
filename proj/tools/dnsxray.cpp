#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dnsxray/commands.hpp"
#include "dnsxray/error.hpp"

using namespace dnsxray;

namespace {

void add_common(CLI::App* cmd, CommonOptions& common, bool out_required = true) {
    auto* seed = cmd->add_option("--seed", common.seed, "Random seed");
    seed->each([&common](const std::string&) { common.seed_given = true; });
    auto* out = cmd->add_option("--out", common.out_dir, "Output directory");
    if (out_required) out->required();
    cmd->add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_flag("--force", common.force, "Overwrite a non-empty output directory");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DGA detection from passive DNS traffic with Shapley explanations"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic traffic scenario");
    add_common(synth_cmd, synth.common);
    synth_cmd->add_flag("--pcap", synth.pcap, "Also write traffic.pcap");

    ExtractOptions extract;
    auto* extract_cmd = app.add_subcommand("extract", "Compute the 24 per-domain features");
    add_common(extract_cmd, extract.common);
    extract_cmd->add_option("--traffic", extract.traffic, "Records (.jsonl) or pcap file")->required()->check(CLI::ExistingFile);
    extract_cmd->add_option("--allow", extract.allow, "Allowlist file")->required();
    extract_cmd->add_option("--block", extract.block, "Blocklist file")->required();
    extract_cmd->add_option("--geo", extract.geo, "CIDR to country CSV");
    extract_cmd->add_option("--rdns", extract.rdns, "Reverse DNS CSV");
    extract_cmd->add_option("--dictionary", extract.dictionary, "Word list");
    extract_cmd->add_option("--window-start", extract.window_start, "Window start (unix seconds)");
    extract_cmd->add_option("--window-end", extract.window_end, "Window end (unix seconds, exclusive)");
    extract_cmd->add_option("--day", extract.day, "Only use calendar day N (1-based) of the window");
    extract_cmd->add_flag("--whole-name", extract.whole_name, "Name features over all labels except the suffix");

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Train a classifier, optionally with grid search");
    add_common(train_cmd, train.common);
    train_cmd->add_option("--features", train.features, "Features CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--model", train.kind, "decision_tree | random_forest | adaboost | knn")->capture_default_str();
    train_cmd->add_option("--params", train.params, "Parameters as a JSON object or JSON file");
    train_cmd->add_option("--grid", train.grid, "Grid as a JSON object of value lists or JSON file");
    train_cmd->add_option("--folds", train.folds, "Cross-validation folds")->capture_default_str();
    train_cmd->add_flag("--balance", train.balance, "Undersample the majority class");
    train_cmd->add_option("--holdout", train.holdout, "Held-out share written to holdout.csv (0 disables)")
        ->capture_default_str();

    EvaluateOptions evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "ROC curves and metrics for one or more models");
    add_common(evaluate_cmd, evaluate.common);
    evaluate_cmd->add_option("--model", evaluate.models, "Model file (repeatable)")->required()->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--features", evaluate.features, "Features CSV")->required()->check(CLI::ExistingFile);

    ExplainOptions explain;
    auto* explain_cmd = app.add_subcommand("explain", "Shapley summary, partial dependence or force data");
    add_common(explain_cmd, explain.common);
    explain_cmd->add_option("--model", explain.model, "Model file")->required()->check(CLI::ExistingFile);
    explain_cmd->add_option("--features", explain.features, "Features CSV")->required()->check(CLI::ExistingFile);
    explain_cmd->add_option("--mode", explain.mode, "summary | pdp | force")->capture_default_str();
    explain_cmd->add_option("--targets", explain.targets, "Domains for force mode")->delimiter(',');
    explain_cmd->add_option("--feature", explain.pdp_features, "Features for pdp mode (default all)")->delimiter(',');
    explain_cmd->add_option("--background", explain.background,
                            "class:count with class in malicious, benign, mixed, all");
    explain_cmd->add_option("--samples", explain.samples, "Rows explained in summary mode")->capture_default_str();
    explain_cmd->add_option("--budget", explain.budget, "Coalitions per explanation")->capture_default_str();
    explain_cmd->add_option("--top", explain.top, "Features drawn in the charts")->capture_default_str();
    explain_cmd->add_option("--grid-size", explain.grid_size, "Quantile points per PDP")->capture_default_str();

    PairsOptions pairs;
    auto* pairs_cmd = app.add_subcommand("pairs", "Scatter and per-class histograms for feature pairs");
    add_common(pairs_cmd, pairs.common);
    pairs_cmd->add_option("--features", pairs.features, "Features CSV")->required()->check(CLI::ExistingFile);
    pairs_cmd->add_option("--pair", pairs.pairs, "feature_a:feature_b (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        RunManifest manifest;
        if (*synth_cmd) manifest = cmd_synth(synth);
        else if (*extract_cmd) manifest = cmd_extract(extract);
        else if (*train_cmd) manifest = cmd_train(train);
        else if (*evaluate_cmd) manifest = cmd_evaluate(evaluate);
        else if (*explain_cmd) manifest = cmd_explain(explain);
        else if (*pairs_cmd) manifest = cmd_pairs(pairs);
        std::cout << manifest.results.dump() << '\n';
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.detail() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
