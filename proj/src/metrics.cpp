#include "dnsxray/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "dnsxray/error.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/parallel.hpp"

namespace dnsxray {

using json = nlohmann::json;

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw Error("DimensionMismatch", "scores and labels differ in length");
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    const auto neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw Error("SingleClassDataset", std::to_string(neg) + " benign / " + std::to_string(pos) + " malicious rows");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) (labels[order[i]] ? tp : fp)++;
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        const auto& last = curve.points.back();
        curve.auc += (fpr - last.fpr) * (tpr + last.tpr) / 2.0;
        curve.points.push_back({s, fpr, tpr});
    }
    return curve;
}

std::vector<double> predict_all(const Model& model, const Dataset& ds) {
    std::vector<double> out(ds.size());
    parallel_for(ds.size(), [&](std::size_t i) { out[i] = model.predict_proba(ds.row(i)); });
    return out;
}

RocCurve roc(const Model& model, const Dataset& ds) {
    require_both_classes(ds);
    const auto scores = predict_all(model, ds);
    return roc_curve(scores, ds.labels);
}

double accuracy(const Model& model, const Dataset& ds) {
    if (ds.empty()) return 0.0;
    const auto scores = predict_all(model, ds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) hits += (scores[i] >= 0.5) == (ds.labels[i] == 1);
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::string format_roc_csv(const RocCurve& curve) {
    std::string out = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points)
        out += format_double(p.threshold) + ',' + format_double(p.fpr) + ',' + format_double(p.tpr) + '\n';
    return out;
}

// --- parameters ---------------------------------------------------------------

std::string ModelParams::describe() const {
    std::string s;
    switch (kind) {
    case ModelKind::decision_tree:
        s = "criterion=" + std::string(to_string(tree.criterion)) + ";max_depth=" + std::to_string(tree.max_depth);
        break;
    case ModelKind::random_forest:
        s = "criterion=" + std::string(to_string(forest.criterion)) + ";max_depth=" + std::to_string(forest.max_depth) +
            ";n_estimators=" + std::to_string(forest.n_estimators);
        if (!forest.bootstrap) s += ";bootstrap=false";
        if (forest.max_features != 0) s += ";max_features=" + std::to_string(forest.max_features);
        break;
    case ModelKind::adaboost:
        s = "algorithm=SAMME;n_estimators=" + std::to_string(boost.n_estimators);
        if (boost.base_depth != 1) s += ";base_depth=" + std::to_string(boost.base_depth);
        break;
    case ModelKind::knn:
        s = "n_neighbors=" + std::to_string(knn.k) + ";weights=" + std::string(to_string(knn.weighting));
        break;
    }
    return s;
}

json ModelParams::to_json() const {
    switch (kind) {
    case ModelKind::decision_tree:
        return {{"criterion", to_string(tree.criterion)}, {"max_depth", tree.max_depth}};
    case ModelKind::random_forest:
        return {{"criterion", to_string(forest.criterion)},
                {"max_depth", forest.max_depth},
                {"n_estimators", forest.n_estimators},
                {"bootstrap", forest.bootstrap},
                {"max_features", forest.max_features}};
    case ModelKind::adaboost:
        return {{"algorithm", "SAMME"}, {"n_estimators", boost.n_estimators}, {"base_depth", boost.base_depth}};
    case ModelKind::knn:
        return {{"n_neighbors", knn.k}, {"weights", to_string(knn.weighting)}};
    }
    return json::object();
}

int ModelParams::estimators() const {
    if (kind == ModelKind::random_forest) return forest.n_estimators;
    if (kind == ModelKind::adaboost) return boost.n_estimators;
    return 1;
}

int ModelParams::depth() const {
    if (kind == ModelKind::decision_tree) return tree.max_depth;
    if (kind == ModelKind::random_forest) return forest.max_depth;
    if (kind == ModelKind::adaboost) return boost.base_depth;
    return 0;
}

ModelParams default_params(ModelKind kind) {
    ModelParams p;
    p.kind = kind;
    return p;
}

namespace {

int positive_int(const json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000)
        throw Error("ConfigInvalid", key + " must be a positive integer");
    return v.get<int>();
}

std::string string_value(const json& v, const std::string& key) {
    if (!v.is_string()) throw Error("ConfigInvalid", key + " must be a string");
    return v.get<std::string>();
}

void set_param(ModelParams& p, const std::string& key, const json& v) {
    try {
        switch (p.kind) {
        case ModelKind::decision_tree:
            if (key == "criterion") return void(p.tree.criterion = parse_criterion(string_value(v, key)));
            if (key == "max_depth") return void(p.tree.max_depth = positive_int(v, key));
            break;
        case ModelKind::random_forest:
            if (key == "criterion") return void(p.forest.criterion = parse_criterion(string_value(v, key)));
            if (key == "max_depth") return void(p.forest.max_depth = positive_int(v, key));
            if (key == "n_estimators") return void(p.forest.n_estimators = positive_int(v, key));
            if (key == "bootstrap") {
                if (!v.is_boolean()) throw Error("ConfigInvalid", "bootstrap must be a boolean");
                return void(p.forest.bootstrap = v.get<bool>());
            }
            if (key == "max_features") return void(p.forest.max_features = positive_int(v, key));
            break;
        case ModelKind::adaboost:
            if (key == "algorithm") {
                if (string_value(v, key) != "SAMME") throw Error("ConfigInvalid", "only the SAMME algorithm is supported");
                return;
            }
            if (key == "n_estimators") return void(p.boost.n_estimators = positive_int(v, key));
            if (key == "base_depth") return void(p.boost.base_depth = positive_int(v, key));
            break;
        case ModelKind::knn:
            if (key == "n_neighbors" || key == "k") return void(p.knn.k = positive_int(v, key));
            if (key == "weights") return void(p.knn.weighting = parse_weighting(string_value(v, key)));
            break;
        }
    } catch (const Error& e) {
        if (e.kind() == "ConfigInvalid") throw;
        throw Error("ConfigInvalid", e.detail());
    }
    throw Error("ConfigInvalid", "unknown parameter '" + key + "' for " + std::string(to_string(p.kind)));
}

} // namespace

ModelParams params_from_json(ModelKind kind, const json& j) {
    if (!j.is_object()) throw Error("ConfigInvalid", "model parameters must be a JSON object");
    auto p = default_params(kind);
    for (const auto& [key, value] : j.items()) set_param(p, key, value);
    return p;
}

std::vector<ModelParams> expand_grid(ModelKind kind, const json& grid) {
    if (!grid.is_object()) throw Error("ConfigInvalid", "grid must be a JSON object");
    std::vector<ModelParams> out{default_params(kind)};
    for (const auto& [key, values] : grid.items()) {
        const json list = values.is_array() ? values : json::array({values});
        if (list.empty()) throw Error("ConfigInvalid", "grid entry '" + key + "' has no values");
        std::vector<ModelParams> next;
        for (const auto& base : out)
            for (const auto& v : list) {
                auto p = base;
                set_param(p, key, v);
                next.push_back(p);
            }
        out = std::move(next);
    }
    return out;
}

Model train(const Dataset& ds, const ModelParams& params, std::uint64_t seed) {
    switch (params.kind) {
    case ModelKind::decision_tree: return train_decision_tree(ds, params.tree);
    case ModelKind::random_forest: return train_random_forest(ds, params.forest, seed);
    case ModelKind::adaboost: return train_adaboost(ds, params.boost);
    case ModelKind::knn: return train_knn(ds, params.knn);
    }
    throw Error("InvalidArgument", "unknown model kind");
}

GridResult grid_search(const Dataset& ds, std::span<const ModelParams> grid, std::size_t folds, std::uint64_t seed) {
    if (grid.empty()) throw Error("InvalidArgument", "grid is empty");
    require_both_classes(ds);
    const auto fold_rows = stratified_folds(ds, folds, seed);

    GridResult result;
    std::set<std::string> seen;
    for (const auto& p : grid)
        if (seen.insert(p.describe()).second) result.points.push_back(p);

    const std::size_t n_points = result.points.size();
    std::vector<double> aucs(n_points * folds);
    parallel_for(n_points * folds, [&](std::size_t job) {
        const std::size_t point = job / folds, fold = job % folds;
        std::vector<std::size_t> train_rows;
        for (std::size_t f = 0; f < folds; ++f)
            if (f != fold) train_rows.insert(train_rows.end(), fold_rows[f].begin(), fold_rows[f].end());
        std::sort(train_rows.begin(), train_rows.end());
        const auto train_ds = ds.subset(train_rows);
        const auto test_ds = ds.subset(fold_rows[fold]);
        const auto model = train(train_ds, result.points[point], seed);
        aucs[job] = roc(model, test_ds).auc;
    });

    std::size_t best = 0;
    for (std::size_t p = 0; p < n_points; ++p) {
        double sum = 0.0;
        for (std::size_t f = 0; f < folds; ++f) {
            const double auc = aucs[p * folds + f];
            sum += auc;
            result.table.push_back({result.points[p].describe(), f, auc});
        }
        result.mean_auc.push_back(sum / static_cast<double>(folds));
    }
    for (std::size_t p = 1; p < n_points; ++p) {
        const auto& a = result.points[p];
        const auto& b = result.points[best];
        const double ma = result.mean_auc[p], mb = result.mean_auc[best];
        if (ma > mb || (ma == mb && (a.estimators() < b.estimators() ||
                                     (a.estimators() == b.estimators() && a.depth() < b.depth()))))
            best = p;
    }
    result.best = result.points[best];
    result.best_mean_auc = result.mean_auc[best];
    return result;
}

std::string format_cv_csv(std::span<const CvRow> rows) {
    std::string out = "params,fold,auc\n";
    for (const auto& r : rows) out += r.params + ',' + std::to_string(r.fold) + ',' + format_double(r.auc) + '\n';
    return out;
}

} // namespace dnsxray
