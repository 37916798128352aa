#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnsxray/dataset.hpp"
#include "dnsxray/models.hpp"

namespace dnsxray {

struct RocPoint {
    /// scores >= threshold are called malicious; +inf for the origin point
    double threshold;
    double fpr;
    double tpr;
};

/// Points run from (0,0) to (1,1) with the threshold descending.
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Label 1 is the positive class. Equal scores form one step.
/// Throws SingleClassDataset.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

std::vector<double> predict_all(const Model& model, const Dataset& ds);
RocCurve roc(const Model& model, const Dataset& ds);

double accuracy(const Model& model, const Dataset& ds);

/// "threshold,fpr,tpr" rows.
std::string format_roc_csv(const RocCurve& curve);

/// Hyperparameters for any model kind; only the member matching `kind` is used.
struct ModelParams {
    ModelKind kind = ModelKind::random_forest;
    TreeParams tree;
    ForestParams forest;
    BoostParams boost;
    KnnParams knn;

    /// Stable "key=value;key=value" form used in CV tables and for deduplication.
    std::string describe() const;
    nlohmann::json to_json() const;
    int estimators() const;
    int depth() const;
};

/// Defaults per kind: DT gini/5, RF entropy/20/125, AdaBoost 175, KNN 13/distance.
ModelParams default_params(ModelKind kind);

/// Overrides defaults with keys from a JSON object. Throws ConfigInvalid on
/// unknown keys or bad values.
ModelParams params_from_json(ModelKind kind, const nlohmann::json& j);

/// Cartesian product of a JSON object mapping parameter names to value arrays
/// (scalars count as one-element arrays). Keys vary in sorted order, the last
/// fastest. Throws ConfigInvalid.
std::vector<ModelParams> expand_grid(ModelKind kind, const nlohmann::json& grid);

Model train(const Dataset& ds, const ModelParams& params, std::uint64_t seed);

struct CvRow {
    std::string params;
    std::size_t fold;
    double auc;
};

struct GridResult {
    ModelParams best;
    double best_mean_auc = 0.0;
    /// deduplicated grid, in first-appearance order, with mean AUC per point
    std::vector<ModelParams> points;
    std::vector<double> mean_auc;
    std::vector<CvRow> table;
};

/// Stratified k-fold mean AUC per grid point. Ties go to fewer estimators,
/// then smaller depth, then grid order. Throws FoldTooSmall, InvalidArgument
/// on an empty grid.
GridResult grid_search(const Dataset& ds, std::span<const ModelParams> grid, std::size_t folds, std::uint64_t seed);

/// "params,fold,auc" rows.
std::string format_cv_csv(std::span<const CvRow> rows);

} // namespace dnsxray
