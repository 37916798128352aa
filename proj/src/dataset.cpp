#include "dnsxray/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "dnsxray/error.hpp"
#include "dnsxray/rng.hpp"

namespace dnsxray {

void Normalization::apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / stddev[j];
}

std::vector<double> Normalization::apply(std::span<const double> in) const {
    std::vector<double> out(in.size());
    apply(in, out);
    return out;
}

double Normalization::apply(std::size_t feature, double value) const {
    return (value - mean[feature]) / stddev[feature];
}

std::size_t Dataset::count(std::uint8_t label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

void Dataset::add(std::span<const double> x, std::uint8_t label, std::string domain) {
    if (x.size() != dim())
        throw Error("DimensionMismatch", "row has " + std::to_string(x.size()) + " values, expected " + std::to_string(dim()));
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(label);
    domains.push_back(std::move(domain));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out(feature_names);
    out.values.reserve(rows.size() * dim());
    for (auto i : rows) out.add(row(i), labels[i], domains[i]);
    return out;
}

std::vector<std::string> canonical_feature_names() {
    std::vector<std::string> names;
    for (auto n : feature_names()) names.emplace_back(n);
    return names;
}

Dataset dataset_from_features(std::span<const LabeledFeatures> rows) {
    Dataset ds(canonical_feature_names());
    for (const auto& r : rows) {
        if (r.label == Label::UNKNOWN) continue;
        ds.add(r.features.values, r.label == Label::MALICIOUS ? 1 : 0, r.domain);
    }
    return ds;
}

Normalization fit_normalization(const Dataset& ds) {
    Normalization norm;
    const std::size_t d = ds.dim();
    norm.mean.assign(d, 0.0);
    norm.stddev.assign(d, 1.0);
    if (ds.empty()) return norm;
    const double n = static_cast<double>(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) norm.mean[j] += ds.row(i)[j];
    for (auto& m : norm.mean) m /= n;
    std::vector<double> ss(d, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = ds.row(i)[j] - norm.mean[j];
            ss[j] += dev * dev;
        }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(ss[j] / n);
        norm.stddev[j] = sd > 0.0 ? sd : 1.0;
    }
    return norm;
}

void require_both_classes(const Dataset& ds) {
    const auto mal = ds.count(1);
    if (mal == 0 || mal == ds.size())
        throw Error("SingleClassDataset", std::to_string(ds.size() - mal) + " benign / " + std::to_string(mal) + " malicious rows");
}

namespace {

std::vector<std::size_t> rows_of(const Dataset& ds, std::uint8_t label) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] == label) out.push_back(i);
    return out;
}

} // namespace

Dataset balance(const Dataset& ds, std::uint64_t seed) {
    require_both_classes(ds);
    auto benign = rows_of(ds, 0);
    auto malicious = rows_of(ds, 1);
    auto& majority = benign.size() >= malicious.size() ? benign : malicious;
    const std::size_t target = std::min(benign.size(), malicious.size());

    CounterRng rng(seed, 0xba1a);
    rng.shuffle(majority);
    majority.resize(target);

    std::vector<std::size_t> keep = benign;
    keep.insert(keep.end(), malicious.begin(), malicious.end());
    std::sort(keep.begin(), keep.end());
    return ds.subset(keep);
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0) throw Error("InvalidArgument", "test fraction must be in (0, 1)");
    std::vector<std::size_t> train, test;
    for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
        auto rows = rows_of(ds, label);
        CounterRng rng(seed, 0x5b1175ull + label);
        rng.shuffle(rows);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
        test.insert(test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {ds.subset(train), ds.subset(test)};
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw Error("FoldTooSmall", "at least 2 folds are required");
    std::vector<std::vector<std::size_t>> out(folds);
    for (std::uint8_t label : {std::uint8_t{0}, std::uint8_t{1}}) {
        auto rows = rows_of(ds, label);
        if (rows.size() < folds)
            throw Error("FoldTooSmall", "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                            " rows for " + std::to_string(folds) + " folds");
        CounterRng rng(seed, 0xf01dull + label);
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) out[i % folds].push_back(rows[i]);
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

} // namespace dnsxray
