#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnsxray/features.hpp"

namespace dnsxray {

/// Per-feature z-score parameters. A zero stddev is stored as 1 so constant
/// features map to 0.
struct Normalization {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool empty() const { return mean.empty(); }
    void apply(std::span<const double> in, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> in) const;
    double apply(std::size_t feature, double value) const;
};

/// Row-major labeled feature matrix. Labels are 0 (benign) or 1 (malicious).
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    std::vector<std::string> domains;

    Dataset() = default;
    explicit Dataset(std::vector<std::string> names) : feature_names(std::move(names)) {}

    std::size_t dim() const { return feature_names.size(); }
    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim(), dim()}; }
    std::size_t count(std::uint8_t label) const;

    void add(std::span<const double> x, std::uint8_t label, std::string domain = {});
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Canonical 24-feature names as owned strings.
std::vector<std::string> canonical_feature_names();

/// Drops UNKNOWN rows.
Dataset dataset_from_features(std::span<const LabeledFeatures> rows);

Normalization fit_normalization(const Dataset& ds);

/// Throws SingleClassDataset unless both classes are present.
void require_both_classes(const Dataset& ds);

/// Undersamples the majority class to the minority count. Selected rows keep
/// their original relative order.
Dataset balance(const Dataset& ds, std::uint64_t seed);

/// Stratified (train, test) split; test gets round(fraction * class count)
/// rows of each class.
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Row indices per fold; each class is dealt round-robin after a seeded
/// shuffle. Throws FoldTooSmall when a class has fewer rows than folds.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t folds, std::uint64_t seed);

} // namespace dnsxray
