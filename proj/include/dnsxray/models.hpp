#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dnsxray/dataset.hpp"
#include "dnsxray/labeling.hpp"
#include "dnsxray/rng.hpp"

namespace dnsxray {

enum class Criterion { gini, entropy };
enum class ModelKind { decision_tree, random_forest, adaboost, knn };
enum class Weighting { uniform, distance };

std::string_view to_string(Criterion c);
std::string_view to_string(ModelKind k);
std::string_view to_string(Weighting w);
Criterion parse_criterion(std::string_view s);
ModelKind parse_model_kind(std::string_view s);
Weighting parse_weighting(std::string_view s);

struct TreeParams {
    Criterion criterion = Criterion::gini;
    int max_depth = 5;
};

struct ForestParams {
    Criterion criterion = Criterion::entropy;
    int max_depth = 20;
    int n_estimators = 125;
    bool bootstrap = true;
    /// features examined per split; 0 means ceil(sqrt(dim))
    int max_features = 0;
};

struct BoostParams {
    int n_estimators = 175;
    int base_depth = 1;
};

struct KnnParams {
    int k = 13;
    Weighting weighting = Weighting::distance;
};

/// Flat binary tree. Internal nodes route x[feature] <= threshold to `left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    /// leaf class frequency of the malicious class (benign = 1 - p)
    double p_malicious = 0.0;
    /// weighted training mass reaching the node
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
public:
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const;
    int depth() const;
    /// True when some split reads the feature.
    bool reads_feature(std::size_t feature) const;
};

/// Weighted node impurity of a (benign, malicious) mass pair.
double impurity(Criterion criterion, double benign, double malicious);

/// SAMME learner weight for K = 2: ln((1 - err) / err) + ln(K - 1).
double samme_alpha(double error);

inline constexpr double kPerfectLearnerAlpha = 35.0;

struct DecisionTreeModel {
    DecisionTree tree;
    TreeParams params;
};

struct RandomForestModel {
    std::vector<DecisionTree> trees;
    ForestParams params;
    std::uint64_t seed = 0;
};

struct AdaBoostModel {
    std::vector<DecisionTree> learners;
    std::vector<double> alphas;
    BoostParams params;
};

struct KnnModel {
    /// z-normalized training rows, row-major
    std::vector<double> rows;
    std::vector<std::uint8_t> labels;
    KnnParams params;
};

class Model {
public:
    using Impl = std::variant<DecisionTreeModel, RandomForestModel, AdaBoostModel, KnnModel>;

    Model(Impl impl, Normalization normalization, std::vector<std::string> feature_names);

    ModelKind kind() const;
    std::size_t dim() const { return feature_names_.size(); }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    const Normalization& normalization() const { return normalization_; }
    const Impl& impl() const { return impl_; }

    /// Score toward the malicious class, in [0, 1]. Throws DimensionMismatch.
    double predict_proba(std::span<const double> x) const;
    /// MALICIOUS when the score is >= 0.5.
    Label predict(std::span<const double> x) const;

    nlohmann::json params_json() const;
    nlohmann::json to_json() const;
    static Model from_json(const nlohmann::json& j);

private:
    double score(std::span<const double> x) const;

    Impl impl_;
    Normalization normalization_;
    std::vector<std::string> feature_names_;
};

Model train_decision_tree(const Dataset& ds, const TreeParams& params);
Model train_random_forest(const Dataset& ds, const ForestParams& params, std::uint64_t seed);
Model train_adaboost(const Dataset& ds, const BoostParams& params);
/// Throws KTooLarge when k exceeds the row count.
Model train_knn(const Dataset& ds, const KnnParams& params);

/// Greedy CART growth on weighted rows (exposed for boosting and tests).
/// `rows` may repeat indices (bootstrap draws). max_features == 0 or >= dim
/// examines every feature in index order without touching `rng`.
DecisionTree grow_tree(const Dataset& ds, std::span<const std::size_t> rows, std::span<const double> weights,
                       Criterion criterion, int max_depth, int max_features, CounterRng* rng);

Model load_model(const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);

} // namespace dnsxray
