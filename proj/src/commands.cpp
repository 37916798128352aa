#include "dnsxray/commands.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>

#include "dnsxray/dataset.hpp"
#include "dnsxray/error.hpp"
#include "dnsxray/explain.hpp"
#include "dnsxray/features.hpp"
#include "dnsxray/ingest.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/labeling.hpp"
#include "dnsxray/metrics.hpp"
#include "dnsxray/models.hpp"
#include "dnsxray/report.hpp"
#include "dnsxray/synth.hpp"

namespace dnsxray {

namespace fs = std::filesystem;
using json = nlohmann::json;

json RunManifest::to_json() const {
    return {{"subcommand", subcommand}, {"tool_version", kToolVersion}, {"inputs", inputs},
            {"config", config},         {"seed", seed},                 {"out_dir", out_dir},
            {"started", started},       {"finished", finished},         {"results", results}};
}

void prepare_output_dir(const fs::path& dir, bool force) {
    if (dir.empty()) throw Error("InvalidArgument", "output directory is required");
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) throw Error("OutputExists", dir.string() + " exists and is not a directory");
        if (!force && !fs::is_empty(dir, ec))
            throw Error("OutputExists", dir.string() + " is not empty (use --force to overwrite)");
        return;
    }
    fs::create_directories(dir, ec);
    if (ec) throw Error("FileUnwritable", dir.string() + ": " + ec.message());
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(RunManifest& manifest, const fs::path& out_dir) {
    manifest.finished = utc_now();
    write_file_atomic(out_dir / "manifest.json", manifest.to_json().dump(2) + '\n');
}

namespace {

RunManifest start(const std::string& name, const CommonOptions& common, std::vector<std::string> inputs) {
    prepare_output_dir(common.out_dir, common.force);
    RunManifest m;
    m.subcommand = name;
    m.inputs = std::move(inputs);
    m.config = common.config ? common.config->string() : "";
    m.seed = common.seed;
    m.out_dir = common.out_dir.string();
    m.started = utc_now();
    return m;
}

json load_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("ConfigInvalid", path.string() + ": " + e.what());
    }
}

/// Inline JSON object text, or a path to a JSON file.
json json_argument(const std::string& text) {
    if (!text.empty() && text.front() == '{') {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw Error("ConfigInvalid", e.what());
        }
    }
    return load_json_file(text);
}

void reject_config(const CommonOptions& common, const std::string& name) {
    if (common.config) throw Error("ConfigInvalid", name + " takes no --config file");
}

Dataset load_dataset(const fs::path& path) {
    const auto rows = parse_feature_csv(read_file(path));
    return dataset_from_features(rows);
}

std::string safe_name(std::string_view s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
    return out;
}

} // namespace

// --- synth ----------------------------------------------------------------------

RunManifest cmd_synth(const SynthOptions& opts) {
    ScenarioConfig cfg;
    if (opts.common.config) apply_config_json(load_json_file(*opts.common.config), cfg);
    if (opts.common.seed_given || !opts.common.config) cfg.seed = opts.common.seed;
    validate(cfg);

    auto m = start("synth", opts.common, {});
    m.seed = cfg.seed;
    const auto summary = write_scenario(cfg, opts.common.out_dir, opts.pcap);
    m.results = {{"observations", summary.observations},
                 {"truth_rows", summary.truth_rows},
                 {"benign_domains", cfg.benign_domains},
                 {"dga_domains", cfg.dga_domains},
                 {"unknown_domains", cfg.unknown_domains},
                 {"window_start", cfg.window_start()},
                 {"window_end", cfg.window_end()},
                 {"pcap", opts.pcap}};
    write_manifest(m, opts.common.out_dir);
    return m;
}

// --- extract --------------------------------------------------------------------

RunManifest cmd_extract(const ExtractOptions& opts) {
    ExtractParams params;
    params.whole_name = opts.whole_name;
    if (opts.common.config) {
        const auto cfg = load_json_file(*opts.common.config);
        for (const auto& [key, v] : cfg.items()) {
            try {
                if (key == "short_life_seconds") params.time.short_life_seconds = v.get<std::int64_t>();
                else if (key == "cusum_threshold") params.time.cusum_threshold = v.get<double>();
                else if (key == "cusum_drift") params.time.cusum_drift = v.get<double>();
                else if (key == "popular_threshold") params.time.popular_threshold = v.get<std::uint32_t>();
                else if (key == "whole_name") params.whole_name = params.whole_name || v.get<bool>();
                else throw Error("ConfigInvalid", "unknown extract setting '" + key + "'");
            } catch (const json::exception& e) {
                throw Error("ConfigInvalid", key + ": " + e.what());
            }
        }
    }
    if (opts.window_start.has_value() != opts.window_end.has_value())
        throw Error("ConfigInvalid", "--window-start and --window-end must be given together");

    std::vector<std::string> inputs{opts.traffic.string(), opts.allow.string(), opts.block.string()};
    for (const auto* p : {&opts.geo, &opts.rdns, &opts.dictionary})
        if (*p) inputs.push_back((*p)->string());

    auto load = load_traffic(opts.traffic);
    const std::size_t total = load.observations.size();
    auto resolved = filter_resolved(std::move(load.observations));
    auto lists = load_lists(opts.allow, opts.block);

    AuxiliaryTables aux;
    if (opts.geo) aux.geo = parse_geo_csv(read_file(*opts.geo));
    if (opts.rdns) aux.rdns = parse_rdns_csv(read_file(*opts.rdns));
    if (opts.dictionary) parse_dictionary(read_file(*opts.dictionary), aux);

    std::int64_t ws = 0, we = 86400;
    if (opts.window_start) {
        ws = *opts.window_start;
        we = *opts.window_end;
    } else if (!resolved.kept.empty()) {
        auto [lo, hi] = std::minmax_element(resolved.kept.begin(), resolved.kept.end(),
                                            [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
        auto floor_day = [](std::int64_t t) { return (t >= 0 ? t : t - 86399) / 86400 * 86400; };
        ws = floor_day(lo->timestamp);
        we = floor_day(hi->timestamp) + 86400;
    }
    if (we <= ws) throw Error("InvalidWindow", "window end must be after window start");
    if (opts.day) {
        const std::int64_t days = (we - ws + 86399) / 86400;
        if (*opts.day < 1 || *opts.day > days)
            throw Error("ConfigInvalid", "--day " + std::to_string(*opts.day) + " outside the " + std::to_string(days) + "-day window");
        ws += static_cast<std::int64_t>(*opts.day - 1) * 86400;
        we = std::min(we, ws + 86400);
    }

    std::vector<DnsObservation> in_window;
    in_window.reserve(resolved.kept.size());
    for (auto& o : resolved.kept)
        if (o.timestamp >= ws && o.timestamp < we) in_window.push_back(std::move(o));
    const std::size_t out_of_window = resolved.kept.size() - in_window.size();

    auto m = start("extract", opts.common, inputs);
    auto aggs = aggregate(in_window, ws, we);
    std::size_t single_label = 0;
    for (auto it = aggs.begin(); it != aggs.end();) {
        if (split_labels(it->first).size() < 2) {
            it = aggs.erase(it);
            ++single_label;
        } else {
            ++it;
        }
    }

    std::vector<LabeledFeatures> rows;
    std::size_t unknown = 0, benign = 0, malicious = 0;
    for (auto& [name, fv] : extract_all(aggs, aux, params)) {
        const auto label = label_domain(name, lists);
        if (label == Label::UNKNOWN) {
            ++unknown;
            continue;
        }
        ++(label == Label::MALICIOUS ? malicious : benign);
        rows.push_back({name, label, fv});
    }
    write_file_atomic(opts.common.out_dir / "features.csv", format_feature_csv(rows));

    auto warnings = load.warnings;
    warnings.insert(warnings.end(), lists.warnings.begin(), lists.warnings.end());
    m.results = {{"observations", total},
                 {"unresolved_dropped", resolved.dropped},
                 {"out_of_window_dropped", out_of_window},
                 {"window_start", ws},
                 {"window_end", we},
                 {"domains", aggs.size()},
                 {"single_label_dropped", single_label},
                 {"unknown_dropped", unknown},
                 {"benign", benign},
                 {"malicious", malicious},
                 {"warnings", warnings}};
    write_manifest(m, opts.common.out_dir);
    return m;
}

// --- train ----------------------------------------------------------------------

RunManifest cmd_train(const TrainOptions& opts) {
    const auto kind = parse_model_kind(opts.kind);
    json params_json = json::object();
    std::optional<json> grid_json;
    if (opts.common.config) {
        const auto cfg = load_json_file(*opts.common.config);
        for (const auto& [key, v] : cfg.items()) {
            if (key == "params") params_json = v;
            else if (key == "grid") grid_json = v;
            else throw Error("ConfigInvalid", "unknown train setting '" + key + "'");
        }
    }
    if (opts.params) params_json = json_argument(*opts.params);
    if (opts.grid) grid_json = json_argument(*opts.grid);
    if (opts.holdout < 0.0 || opts.holdout >= 1.0) throw Error("ConfigInvalid", "--holdout must be in [0, 1)");

    auto ds = load_dataset(opts.features);
    require_both_classes(ds);
    const std::size_t rows_in = ds.size();
    if (opts.balance) ds = balance(ds, opts.common.seed);

    Dataset train_ds = ds, test_ds(ds.feature_names);
    if (opts.holdout > 0.0) std::tie(train_ds, test_ds) = stratified_split(ds, opts.holdout, opts.common.seed);
    require_both_classes(train_ds);

    auto m = start("train", opts.common, {opts.features.string()});
    ModelParams chosen = params_from_json(kind, params_json);
    if (grid_json) {
        const auto grid = expand_grid(kind, *grid_json);
        const auto result = grid_search(train_ds, grid, opts.folds, opts.common.seed);
        write_file_atomic(opts.common.out_dir / "cv.csv", format_cv_csv(result.table));
        chosen = result.best;
        json points = json::array();
        for (std::size_t i = 0; i < result.points.size(); ++i)
            points.push_back({{"params", result.points[i].describe()}, {"mean_auc", result.mean_auc[i]}});
        m.results["grid"] = std::move(points);
        m.results["best_params"] = result.best.to_json();
        m.results["best_mean_auc"] = result.best_mean_auc;
    }

    const auto model = train(train_ds, chosen, opts.common.seed);
    save_model(model, opts.common.out_dir / "model.json");
    m.results["kind"] = to_string(kind);
    m.results["params"] = chosen.to_json();
    m.results["rows"] = rows_in;
    m.results["balanced"] = opts.balance;
    m.results["train_rows"] = train_ds.size();
    m.results["train_accuracy"] = accuracy(model, train_ds);
    if (!test_ds.empty()) {
        std::vector<LabeledFeatures> held;
        for (std::size_t i = 0; i < test_ds.size(); ++i) {
            LabeledFeatures lf{test_ds.domains[i], test_ds.labels[i] ? Label::MALICIOUS : Label::BENIGN, {}};
            std::copy(test_ds.row(i).begin(), test_ds.row(i).end(), lf.features.values.begin());
            held.push_back(std::move(lf));
        }
        write_file_atomic(opts.common.out_dir / "holdout.csv", format_feature_csv(held));
        m.results["holdout_rows"] = test_ds.size();
        if (test_ds.count(1) > 0 && test_ds.count(0) > 0) m.results["holdout_auc"] = roc(model, test_ds).auc;
    }
    write_manifest(m, opts.common.out_dir);
    return m;
}

// --- evaluate -------------------------------------------------------------------

RunManifest cmd_evaluate(const EvaluateOptions& opts) {
    reject_config(opts.common, "evaluate");
    if (opts.models.empty()) throw Error("InvalidArgument", "at least one model file is required");
    std::vector<std::string> inputs;
    for (const auto& p : opts.models) inputs.push_back(p.string());
    inputs.push_back(opts.features.string());

    std::vector<Model> models;
    for (const auto& p : opts.models) models.push_back(load_model(p));
    const auto ds = load_dataset(opts.features);
    require_both_classes(ds);

    auto m = start("evaluate", opts.common, inputs);
    std::vector<std::pair<std::string, RocCurve>> curves;
    std::map<std::string, int> seen;
    std::string csv = "model,threshold,fpr,tpr\n";
    json metrics = json::array();
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::string name = opts.models[i].stem().string();
        if (const int n = seen[name]++; n > 0) name += "_" + std::to_string(n + 1);
        auto curve = roc(models[i], ds);
        for (const auto& p : curve.points)
            csv += name + ',' + format_double(p.threshold) + ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
        metrics.push_back({{"model", name},
                           {"path", opts.models[i].string()},
                           {"kind", to_string(models[i].kind())},
                           {"params", models[i].params_json()},
                           {"auc", curve.auc},
                           {"accuracy", accuracy(models[i], ds)},
                           {"rows", ds.size()},
                           {"malicious", ds.count(1)}});
        curves.emplace_back(name, std::move(curve));
    }
    write_file_atomic(opts.common.out_dir / "roc.csv", csv);
    write_file_atomic(opts.common.out_dir / "roc.svg", render_roc_svg(curves));
    write_file_atomic(opts.common.out_dir / "metrics.json", json{{"models", metrics}}.dump(2) + '\n');
    m.results["models"] = metrics;
    write_manifest(m, opts.common.out_dir);
    return m;
}

// --- explain --------------------------------------------------------------------

RunManifest cmd_explain(const ExplainOptions& opts) {
    reject_config(opts.common, "explain");
    const auto model = load_model(opts.model);
    const auto ds = load_dataset(opts.features);
    if (ds.dim() != model.dim()) throw Error("DimensionMismatch", "feature table and model differ in width");
    const auto& names = model.feature_names();
    const auto seed = opts.common.seed;
    const fs::path& out = opts.common.out_dir;

    if (opts.mode != "summary" && opts.mode != "pdp" && opts.mode != "force")
        throw Error("InvalidArgument", "mode must be summary, pdp or force");
    std::vector<std::size_t> target_rows;
    if (opts.mode == "force") {
        if (opts.targets.empty()) throw Error("InvalidArgument", "force mode needs --targets");
        for (const auto& t : opts.targets) {
            const auto it = std::find(ds.domains.begin(), ds.domains.end(), normalize_name(t));
            if (it == ds.domains.end()) throw Error("UnknownDomainTarget", "'" + t + "' is not in " + opts.features.string());
            target_rows.push_back(static_cast<std::size_t>(it - ds.domains.begin()));
        }
    }
    std::vector<std::string> pdp_features = opts.pdp_features;
    if (opts.mode == "pdp") {
        if (pdp_features.empty()) pdp_features = names;
        for (const auto& f : pdp_features)
            if (std::find(names.begin(), names.end(), f) == names.end()) throw Error("UnknownFeature", "'" + f + "'");
    }

    const std::string bg_spec = opts.background.value_or(opts.mode == "pdp" ? "malicious:1000" : "mixed:200");
    const auto bg = select_background(ds, bg_spec, seed);
    auto m = start("explain", opts.common, {opts.model.string(), opts.features.string()});
    m.results = {{"mode", opts.mode}, {"background", bg.description}, {"budget", opts.budget}};
    const auto& norm = model.normalization();

    if (opts.mode == "summary") {
        const auto rows = select_rows(ds, opts.samples, seed);
        const auto samples = ds.subset(rows);
        const auto table = summary(model, samples, bg, opts.budget, seed);
        write_file_atomic(out / "attributions.csv", format_attributions_csv(table.attributions, names));
        write_file_atomic(out / "summary.json", summary_to_json(table).dump() + '\n');
        write_file_atomic(out / "summary.svg", render_summary_svg(table, opts.top));
        json ranking = json::array();
        for (const auto& e : table.entries) ranking.push_back({{"feature", e.feature}, {"mean_abs_phi", e.mean_abs_phi}});
        m.results["samples"] = samples.size();
        m.results["ranking"] = std::move(ranking);
    } else if (opts.mode == "pdp") {
        std::vector<PdpCurve> curves;
        json listed = json::array();
        for (const auto& f : pdp_features) {
            auto curve = pdp(model, f, bg, opts.grid_size);
            std::vector<double> grid, values;
            for (double g : curve.grid) grid.push_back(norm.apply(curve.index, g));
            for (std::size_t b = 0; b < bg.size(); ++b) values.push_back(norm.apply(curve.index, bg.row(b)[curve.index]));
            write_file_atomic(out / ("pdp_" + f + ".svg"), render_pdp_svg(curve, grid, values));
            listed.push_back({{"feature", f},
                              {"grid_points", curve.grid.size()},
                              {"expected_feature_value", norm.apply(curve.index, curve.expected_feature_value)},
                              {"expected_output", curve.expected_output}});
            curves.push_back(std::move(curve));
        }
        write_file_atomic(out / "pdp.csv", format_pdp_csv(curves, norm));
        m.results["curves"] = std::move(listed);
    } else {
        std::vector<Attribution> attributions;
        json records = json::array();
        for (auto row : target_rows) {
            auto a = kernel_shap(model, ds.row(row), bg, opts.budget, seed);
            a.domain = ds.domains[row];
            const auto record = force(a, names, ds.row(row));
            write_file_atomic(out / ("force_" + safe_name(a.domain) + ".svg"), render_force_svg(record, opts.top));
            records.push_back(force_to_json(record));
            attributions.push_back(std::move(a));
        }
        write_file_atomic(out / "attributions.csv", format_attributions_csv(attributions, names));
        write_file_atomic(out / "force.json", records.dump(2) + '\n');
        m.results["targets"] = opts.targets;
    }
    write_manifest(m, out);
    return m;
}

// --- pairs ----------------------------------------------------------------------

RunManifest cmd_pairs(const PairsOptions& opts) {
    reject_config(opts.common, "pairs");
    std::vector<std::string> pairs = opts.pairs;
    if (pairs.empty()) pairs = {"num_chars_pct:pct_of_lms", "daily_similarity:local_numOf_changes"};
    std::vector<std::pair<std::size_t, std::size_t>> idx;
    for (const auto& p : pairs) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw Error("InvalidArgument", "pair '" + p + "' must be feature_a:feature_b");
        const auto a = feature_index(p.substr(0, colon));
        const auto b = feature_index(p.substr(colon + 1));
        if (!a) throw Error("UnknownFeature", "'" + p.substr(0, colon) + "'");
        if (!b) throw Error("UnknownFeature", "'" + p.substr(colon + 1) + "'");
        idx.emplace_back(*a, *b);
    }
    const auto ds = load_dataset(opts.features);
    auto m = start("pairs", opts.common, {opts.features.string()});
    json emitted = json::array();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [a, b] = idx[k];
        const std::string an(feature_names()[a]), bn(feature_names()[b]);
        std::vector<double> xs, ys;
        std::string csv = "domain,label," + an + ',' + bn + '\n';
        for (std::size_t i = 0; i < ds.size(); ++i) {
            xs.push_back(ds.row(i)[a]);
            ys.push_back(ds.row(i)[b]);
            csv += ds.domains[i] + ',' + (ds.labels[i] ? "malicious" : "benign") + ',' + format_double(xs.back()) + ',' +
                   format_double(ys.back()) + '\n';
        }
        const std::string stem = "pair_" + an + "__" + bn;
        write_file_atomic(opts.common.out_dir / (stem + ".csv"), csv);
        write_file_atomic(opts.common.out_dir / (stem + ".svg"), render_pairs_svg(an, bn, xs, ys, ds.labels));
        emitted.push_back(stem);
    }
    m.results = {{"pairs", emitted}, {"rows", ds.size()}};
    write_manifest(m, opts.common.out_dir);
    return m;
}

} // namespace dnsxray
