#include "dnsxray/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dnsxray/error.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/parallel.hpp"

namespace dnsxray {

using json = nlohmann::json;

std::string_view to_string(Criterion c) { return c == Criterion::gini ? "gini" : "entropy"; }

std::string_view to_string(ModelKind k) {
    switch (k) {
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::adaboost: return "adaboost";
    case ModelKind::knn: return "knn";
    }
    return "decision_tree";
}

std::string_view to_string(Weighting w) { return w == Weighting::uniform ? "uniform" : "distance"; }

Criterion parse_criterion(std::string_view s) {
    if (s == "gini") return Criterion::gini;
    if (s == "entropy") return Criterion::entropy;
    throw Error("InvalidArgument", "unknown criterion '" + std::string(s) + "'");
}

ModelKind parse_model_kind(std::string_view s) {
    if (s == "decision_tree" || s == "dt") return ModelKind::decision_tree;
    if (s == "random_forest" || s == "rf") return ModelKind::random_forest;
    if (s == "adaboost" || s == "ada") return ModelKind::adaboost;
    if (s == "knn") return ModelKind::knn;
    throw Error("InvalidArgument", "unknown model kind '" + std::string(s) + "'");
}

Weighting parse_weighting(std::string_view s) {
    if (s == "uniform") return Weighting::uniform;
    if (s == "distance") return Weighting::distance;
    throw Error("InvalidArgument", "unknown weighting '" + std::string(s) + "'");
}

double impurity(Criterion criterion, double benign, double malicious) {
    const double total = benign + malicious;
    if (total <= 0.0) return 0.0;
    const double p = malicious / total;
    const double q = benign / total;
    if (criterion == Criterion::gini) return 1.0 - p * p - q * q;
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (q > 0.0) h -= q * std::log2(q);
    return h;
}

double samme_alpha(double error) {
    constexpr double kClasses = 2.0;
    return std::log((1.0 - error) / error) + std::log(kClasses - 1.0);
}

// --- DecisionTree -----------------------------------------------------------

double DecisionTree::predict(std::span<const double> x) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].p_malicious;
}

int DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<int> depth(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.is_leaf()) continue;
        depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
        depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
        best = std::max(best, depth[i] + 1);
    }
    return best;
}

bool DecisionTree::reads_feature(std::size_t feature) const {
    return std::any_of(nodes.begin(), nodes.end(),
                       [&](const TreeNode& n) { return !n.is_leaf() && static_cast<std::size_t>(n.feature) == feature; });
}

// --- CART growth ------------------------------------------------------------

namespace {

struct Sample {
    std::size_t row;
    double weight;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& ds, Criterion criterion, int max_depth, int max_features, CounterRng* rng)
        : ds_(ds), criterion_(criterion), max_depth_(max_depth), rng_(rng) {
        const auto d = static_cast<int>(ds.dim());
        max_features_ = (max_features <= 0 || max_features >= d) ? d : max_features;
    }

    DecisionTree build(std::vector<Sample> samples) {
        DecisionTree tree;
        nodes_ = &tree.nodes;
        grow(std::move(samples), 0);
        return tree;
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double child_impurity = 0.0;
    };

    int grow(std::vector<Sample> samples, int depth) {
        double w_benign = 0.0, w_mal = 0.0;
        for (const auto& s : samples) (ds_.labels[s.row] ? w_mal : w_benign) += s.weight;
        const double total = w_benign + w_mal;

        const int id = static_cast<int>(nodes_->size());
        TreeNode node;
        node.weight = total;
        node.p_malicious = total > 0.0 ? w_mal / total : 0.5;
        nodes_->push_back(node);

        if (depth >= max_depth_ || samples.size() < 2 || impurity(criterion_, w_benign, w_mal) == 0.0) return id;
        auto split = best_split(samples, w_benign, w_mal);
        if (split.feature < 0) return id;

        std::vector<Sample> left, right;
        const auto f = static_cast<std::size_t>(split.feature);
        for (const auto& s : samples) (ds_.row(s.row)[f] <= split.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();

        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        auto& n = (*nodes_)[static_cast<std::size_t>(id)];
        n.feature = split.feature;
        n.threshold = split.threshold;
        n.left = l;
        n.right = r;
        return id;
    }

    std::vector<std::size_t> feature_order() {
        std::vector<std::size_t> order(ds_.dim());
        std::iota(order.begin(), order.end(), 0);
        if (max_features_ < static_cast<int>(ds_.dim()) && rng_) rng_->shuffle(order);
        return order;
    }

    Split best_split(const std::vector<Sample>& samples, double w_benign, double w_mal) {
        Split best;
        double best_score = std::numeric_limits<double>::infinity();
        int visited = 0;
        std::vector<std::pair<double, std::size_t>> sorted(samples.size());
        for (auto f : feature_order()) {
            if (visited >= max_features_) break;
            for (std::size_t i = 0; i < samples.size(); ++i) sorted[i] = {ds_.row(samples[i].row)[f], i};
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue; // constant in this node
            ++visited;

            double lb = 0.0, lm = 0.0;
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                const auto& s = samples[sorted[i].second];
                (ds_.labels[s.row] ? lm : lb) += s.weight;
                const double a = sorted[i].first, b = sorted[i + 1].first;
                if (!(a < b)) continue;
                const double rb = w_benign - lb, rm = w_mal - lm;
                const double score = (lb + lm) * impurity(criterion_, lb, lm) + (rb + rm) * impurity(criterion_, rb, rm);
                if (score < best_score) {
                    best_score = score;
                    double mid = a + (b - a) / 2.0;
                    if (mid >= b) mid = a;
                    best = {static_cast<int>(f), mid, score};
                }
            }
        }
        return best;
    }

    const Dataset& ds_;
    Criterion criterion_;
    int max_depth_;
    int max_features_;
    CounterRng* rng_;
    std::vector<TreeNode>* nodes_ = nullptr;
};

void check_trainable(const Dataset& ds) {
    if (ds.empty()) throw Error("EmptyDataset", "no rows to train on");
}

} // namespace

DecisionTree grow_tree(const Dataset& ds, std::span<const std::size_t> rows, std::span<const double> weights,
                       Criterion criterion, int max_depth, int max_features, CounterRng* rng) {
    std::vector<Sample> samples(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) samples[i] = {rows[i], weights.empty() ? 1.0 : weights[i]};
    return TreeBuilder(ds, criterion, max_depth, max_features, rng).build(std::move(samples));
}

Model train_decision_tree(const Dataset& ds, const TreeParams& params) {
    check_trainable(ds);
    if (params.max_depth < 1) throw Error("InvalidArgument", "max_depth must be >= 1");
    std::vector<std::size_t> rows(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
    auto tree = grow_tree(ds, rows, {}, params.criterion, params.max_depth, 0, nullptr);
    return Model(DecisionTreeModel{std::move(tree), params}, fit_normalization(ds), ds.feature_names);
}

Model train_random_forest(const Dataset& ds, const ForestParams& params, std::uint64_t seed) {
    check_trainable(ds);
    if (params.max_depth < 1 || params.n_estimators < 1 || params.max_features < 0)
        throw Error("InvalidArgument", "forest parameters out of range");
    const int max_features = params.max_features == 0
                                 ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(ds.dim()))))
                                 : params.max_features;

    std::vector<DecisionTree> trees(static_cast<std::size_t>(params.n_estimators));
    parallel_for(trees.size(), [&](std::size_t t) {
        CounterRng rng(seed, 0x7700000ull + t);
        std::vector<std::size_t> rows(ds.size());
        if (params.bootstrap)
            for (auto& r : rows) r = rng.below(ds.size());
        else
            std::iota(rows.begin(), rows.end(), 0);
        trees[t] = grow_tree(ds, rows, {}, params.criterion, params.max_depth, max_features, &rng);
    });
    return Model(RandomForestModel{std::move(trees), params, seed}, fit_normalization(ds), ds.feature_names);
}

Model train_adaboost(const Dataset& ds, const BoostParams& params) {
    check_trainable(ds);
    if (params.n_estimators < 1 || params.base_depth < 1) throw Error("InvalidArgument", "boosting parameters out of range");
    const std::size_t n = ds.size();
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> w(n, 1.0 / static_cast<double>(n));

    AdaBoostModel model;
    model.params = params;
    for (int m = 0; m < params.n_estimators; ++m) {
        auto learner = grow_tree(ds, rows, w, Criterion::gini, params.base_depth, 0, nullptr);
        std::vector<bool> miss(n);
        double err = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t vote = learner.predict(ds.row(i)) >= 0.5 ? 1 : 0;
            miss[i] = vote != ds.labels[i];
            if (miss[i]) err += w[i];
            total += w[i];
        }
        err /= total;
        if (err >= 0.5) break; // no better than chance for K = 2
        if (err <= 0.0) {
            model.learners.push_back(std::move(learner));
            model.alphas.push_back(kPerfectLearnerAlpha);
            break;
        }
        const double alpha = samme_alpha(err);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (miss[i]) w[i] *= std::exp(alpha);
            sum += w[i];
        }
        for (auto& wi : w) wi /= sum;
        model.learners.push_back(std::move(learner));
        model.alphas.push_back(alpha);
    }
    return Model(std::move(model), fit_normalization(ds), ds.feature_names);
}

Model train_knn(const Dataset& ds, const KnnParams& params) {
    check_trainable(ds);
    if (params.k < 1) throw Error("InvalidArgument", "k must be >= 1");
    if (static_cast<std::size_t>(params.k) > ds.size())
        throw Error("KTooLarge", "k = " + std::to_string(params.k) + " exceeds " + std::to_string(ds.size()) + " rows");
    auto norm = fit_normalization(ds);
    KnnModel model;
    model.params = params;
    model.labels = ds.labels;
    model.rows.resize(ds.values.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        norm.apply(ds.row(i), std::span<double>(model.rows.data() + i * ds.dim(), ds.dim()));
    return Model(std::move(model), std::move(norm), ds.feature_names);
}

// --- Model ------------------------------------------------------------------

Model::Model(Impl impl, Normalization normalization, std::vector<std::string> feature_names)
    : impl_(std::move(impl)), normalization_(std::move(normalization)), feature_names_(std::move(feature_names)) {}

ModelKind Model::kind() const {
    return std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) return ModelKind::decision_tree;
            else if constexpr (std::is_same_v<T, RandomForestModel>) return ModelKind::random_forest;
            else if constexpr (std::is_same_v<T, AdaBoostModel>) return ModelKind::adaboost;
            else return ModelKind::knn;
        },
        impl_);
}

double Model::predict_proba(std::span<const double> x) const {
    if (x.size() != dim())
        throw Error("DimensionMismatch", "input has " + std::to_string(x.size()) + " values, model expects " + std::to_string(dim()));
    return std::clamp(score(x), 0.0, 1.0);
}

Label Model::predict(std::span<const double> x) const {
    return predict_proba(x) >= 0.5 ? Label::MALICIOUS : Label::BENIGN;
}

double Model::score(std::span<const double> x) const {
    if (const auto* dt = std::get_if<DecisionTreeModel>(&impl_)) return dt->tree.predict(x);
    if (const auto* rf = std::get_if<RandomForestModel>(&impl_)) {
        double sum = 0.0;
        for (const auto& t : rf->trees) sum += t.predict(x);
        return sum / static_cast<double>(rf->trees.size());
    }
    if (const auto* ada = std::get_if<AdaBoostModel>(&impl_)) {
        double num = 0.0, den = 0.0;
        for (std::size_t m = 0; m < ada->learners.size(); ++m) {
            if (ada->learners[m].predict(x) >= 0.5) num += ada->alphas[m];
            den += ada->alphas[m];
        }
        return den > 0.0 ? num / den : 0.5;
    }

    const auto& knn = std::get<KnnModel>(impl_);
    const std::size_t d = dim();
    const std::size_t n = knn.labels.size();
    const auto z = normalization_.apply(x);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        const double* r = knn.rows.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) s += (z[j] - r[j]) * (z[j] - r[j]);
        dist[i] = {s, i};
    }
    const auto k = static_cast<std::size_t>(knn.params.k);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    if (knn.params.weighting == Weighting::uniform) {
        double mal = 0.0;
        for (std::size_t i = 0; i < k; ++i) mal += knn.labels[dist[i].second];
        return mal / static_cast<double>(k);
    }
    std::size_t exact = 0, exact_mal = 0;
    for (std::size_t i = 0; i < k; ++i)
        if (dist[i].first == 0.0) {
            ++exact;
            exact_mal += knn.labels[dist[i].second];
        }
    if (exact > 0) return static_cast<double>(exact_mal) / static_cast<double>(exact);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = 1.0 / std::sqrt(dist[i].first);
        num += w * knn.labels[dist[i].second];
        den += w;
    }
    return num / den;
}

// --- serialization ----------------------------------------------------------

namespace {

json tree_to_json(const DecisionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.p_malicious, n.weight});
    return json{{"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j) {
    DecisionTree tree;
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.p_malicious = n.at(4).get<double>();
        node.weight = n.at(5).get<double>();
        tree.nodes.push_back(node);
    }
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw Error("ModelInvalid", "tree without nodes");
    for (const auto& n : tree.nodes)
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count || !std::isfinite(n.threshold)))
            throw Error("ModelInvalid", "tree node links out of range");
    return tree;
}

} // namespace

json Model::params_json() const {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>)
                return {{"criterion", to_string(m.params.criterion)}, {"max_depth", m.params.max_depth}};
            else if constexpr (std::is_same_v<T, RandomForestModel>)
                return {{"criterion", to_string(m.params.criterion)},
                        {"max_depth", m.params.max_depth},
                        {"n_estimators", m.params.n_estimators},
                        {"bootstrap", m.params.bootstrap},
                        {"max_features", m.params.max_features}};
            else if constexpr (std::is_same_v<T, AdaBoostModel>)
                return {{"algorithm", "SAMME"}, {"n_estimators", m.params.n_estimators}, {"base_depth", m.params.base_depth}};
            else
                return {{"n_neighbors", m.params.k}, {"weights", to_string(m.params.weighting)}};
        },
        impl_);
}

json Model::to_json() const {
    json j;
    j["version"] = "1";
    j["kind"] = to_string(kind());
    j["params"] = params_json();
    j["normalization"] = {{"mean", normalization_.mean}, {"stddev", normalization_.stddev}};
    j["feature_names"] = feature_names_;
    j["seed"] = 0;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, DecisionTreeModel>) {
                j["trees"] = json::array({tree_to_json(m.tree)});
            } else if constexpr (std::is_same_v<T, RandomForestModel>) {
                json trees = json::array();
                for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
                j["trees"] = std::move(trees);
                j["seed"] = m.seed;
            } else if constexpr (std::is_same_v<T, AdaBoostModel>) {
                json stumps = json::array();
                for (std::size_t i = 0; i < m.learners.size(); ++i)
                    stumps.push_back({{"alpha", m.alphas[i]}, {"tree", tree_to_json(m.learners[i])}});
                j["stumps"] = std::move(stumps);
            } else {
                const std::size_t d = feature_names_.size();
                json rows = json::array();
                for (std::size_t i = 0; i < m.labels.size(); ++i)
                    rows.push_back(std::vector<double>(m.rows.begin() + static_cast<std::ptrdiff_t>(i * d),
                                                       m.rows.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
                j["rows"] = std::move(rows);
                j["labels"] = m.labels;
            }
        },
        impl_);
    return j;
}

Model Model::from_json(const json& j) {
    try {
        if (j.at("version").get<std::string>() != "1") throw Error("ModelInvalid", "unsupported model version");
        const auto kind = parse_model_kind(j.at("kind").get<std::string>());
        const auto& p = j.at("params");
        Normalization norm;
        norm.mean = j.at("normalization").at("mean").get<std::vector<double>>();
        norm.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
        auto names = j.at("feature_names").get<std::vector<std::string>>();
        if (norm.mean.size() != names.size() || norm.stddev.size() != names.size())
            throw Error("ModelInvalid", "normalization does not match feature count");

        switch (kind) {
        case ModelKind::decision_tree: {
            DecisionTreeModel m;
            m.params = {parse_criterion(p.at("criterion").get<std::string>()), p.at("max_depth").get<int>()};
            m.tree = tree_from_json(j.at("trees").at(0));
            return Model(std::move(m), std::move(norm), std::move(names));
        }
        case ModelKind::random_forest: {
            RandomForestModel m;
            m.params.criterion = parse_criterion(p.at("criterion").get<std::string>());
            m.params.max_depth = p.at("max_depth").get<int>();
            m.params.n_estimators = p.at("n_estimators").get<int>();
            m.params.bootstrap = p.value("bootstrap", true);
            m.params.max_features = p.value("max_features", 0);
            m.seed = j.at("seed").get<std::uint64_t>();
            for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
            if (m.trees.size() != static_cast<std::size_t>(m.params.n_estimators))
                throw Error("ModelInvalid", "tree count differs from n_estimators");
            return Model(std::move(m), std::move(norm), std::move(names));
        }
        case ModelKind::adaboost: {
            AdaBoostModel m;
            m.params.n_estimators = p.at("n_estimators").get<int>();
            m.params.base_depth = p.value("base_depth", 1);
            for (const auto& s : j.at("stumps")) {
                const double alpha = s.at("alpha").get<double>();
                if (!std::isfinite(alpha)) throw Error("ModelInvalid", "non-finite learner weight");
                m.alphas.push_back(alpha);
                m.learners.push_back(tree_from_json(s.at("tree")));
            }
            return Model(std::move(m), std::move(norm), std::move(names));
        }
        case ModelKind::knn: {
            KnnModel m;
            m.params.k = p.at("n_neighbors").get<int>();
            m.params.weighting = parse_weighting(p.at("weights").get<std::string>());
            m.labels = j.at("labels").get<std::vector<std::uint8_t>>();
            for (const auto& r : j.at("rows")) {
                auto row = r.get<std::vector<double>>();
                if (row.size() != names.size()) throw Error("ModelInvalid", "stored row has wrong width");
                m.rows.insert(m.rows.end(), row.begin(), row.end());
            }
            if (m.labels.size() * names.size() != m.rows.size() || static_cast<std::size_t>(m.params.k) > m.labels.size())
                throw Error("ModelInvalid", "stored rows inconsistent");
            return Model(std::move(m), std::move(norm), std::move(names));
        }
        }
    } catch (const json::exception& e) {
        throw Error("ModelInvalid", e.what());
    }
    throw Error("ModelInvalid", "unknown model kind");
}

Model load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("ModelInvalid", path.string() + ": " + e.what());
    }
    return Model::from_json(j);
}

void save_model(const Model& model, const std::filesystem::path& path) {
    write_file_atomic(path, model.to_json().dump() + '\n');
}

} // namespace dnsxray
