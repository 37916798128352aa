#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dnsxray/dataset.hpp"
#include "dnsxray/models.hpp"

namespace dnsxray {

/// Any scalar model over raw feature rows.
using ScoreFn = std::function<double(std::span<const double>)>;

ScoreFn score_fn(const Model& model);

/// Rows substituted for absent features, row-major in raw feature units.
struct BackgroundSet {
    std::size_t dim = 0;
    std::vector<double> values;
    std::string description;

    std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
    bool empty() const { return values.empty(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

BackgroundSet background_from(const Dataset& ds, std::string description = "all rows");

/// Row indices chosen by a "<class>:<count>" spec, in dataset order. Throws
/// ConfigInvalid, EmptyBackground.
std::vector<std::size_t> select_rows(const Dataset& ds, std::string_view spec, std::uint64_t seed);

/// Parses "<class>:<count>" where class is malicious, benign, mixed or all.
/// Picks count rows without replacement (all rows when fewer are available);
/// "mixed" keeps the class proportions. Throws ConfigInvalid, EmptyBackground.
BackgroundSet select_background(const Dataset& ds, std::string_view spec, std::uint64_t seed);

struct Attribution {
    std::string domain;
    double base_value = 0.0;
    std::vector<double> phi;
    double model_output = 0.0;
    std::size_t coalitions_used = 0;
    bool exact = false;
};

inline constexpr std::size_t kMaxExactFeatures = 12;

/// Kernel Shapley estimate with interventional masking. Every coalition is
/// enumerated when dim <= 12 or budget >= 2^dim; otherwise `budget` coalitions
/// (endpoints included) are drawn. The empty and full coalitions are hard
/// constraints, so base + sum(phi) equals the model output.
/// Throws BudgetTooSmall (sampled mode, budget < 2 dim + 2), DimensionMismatch,
/// EmptyBackground.
Attribution kernel_shap(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg, std::size_t budget,
                        std::uint64_t seed);
Attribution kernel_shap(const Model& model, std::span<const double> x, const BackgroundSet& bg, std::size_t budget,
                        std::uint64_t seed);

/// Subset-sum Shapley values. Throws TooManyFeatures above 12 features.
std::vector<double> exact_shapley_oracle(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg);

struct SummaryEntry {
    std::string feature;
    std::size_t index = 0;
    double mean_abs_phi = 0.0;
    /// (phi, normalized feature value) per explained sample
    std::vector<std::pair<double, double>> points;
};

/// Features sorted by mean |phi| descending, ties by feature index.
struct SummaryTable {
    std::vector<SummaryEntry> entries;
    std::vector<Attribution> attributions;
};

/// Attributes every row of `samples` (in parallel). Throws EmptyDataset.
SummaryTable summary(const Model& model, const Dataset& samples, const BackgroundSet& bg, std::size_t budget,
                     std::uint64_t seed);

struct PdpCurve {
    std::string feature;
    std::size_t index = 0;
    /// strictly increasing raw feature values
    std::vector<double> grid;
    std::vector<double> mean_output;
    double expected_feature_value = 0.0;
    double expected_output = 0.0;
};

/// Nearest-rank quantiles at i / (grid_size - 1), deduplicated.
std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_size);

/// Throws UnknownFeature, EmptyBackground.
PdpCurve pdp(const ScoreFn& f, std::span<const std::string> feature_names, std::string_view feature,
             const BackgroundSet& bg, std::size_t grid_size);
PdpCurve pdp(const Model& model, std::string_view feature, const BackgroundSet& bg, std::size_t grid_size);

struct ForceEntry {
    std::string feature;
    std::size_t index = 0;
    double phi = 0.0;
    double value = 0.0;
};

struct ForceRecord {
    std::string domain;
    double base_value = 0.0;
    double model_output = 0.0;
    /// negative phi, largest magnitude first
    std::vector<ForceEntry> benign;
    /// positive phi, largest magnitude first
    std::vector<ForceEntry> malicious;
};

ForceRecord force(const Attribution& attribution, std::span<const std::string> feature_names,
                  std::span<const double> values = {});

/// "domain,base,output,phi_<feature>..." rows.
std::string format_attributions_csv(std::span<const Attribution> rows, std::span<const std::string> feature_names);
/// "feature,grid_value,mean_output" rows. Grid values are z-normalized with
/// `norm` when it is non-empty.
std::string format_pdp_csv(std::span<const PdpCurve> curves, const Normalization& norm);
nlohmann::json summary_to_json(const SummaryTable& table);
nlohmann::json force_to_json(const ForceRecord& record);

} // namespace dnsxray
