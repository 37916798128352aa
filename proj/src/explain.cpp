#include "dnsxray/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/Dense>

#include "dnsxray/error.hpp"
#include "dnsxray/io.hpp"
#include "dnsxray/parallel.hpp"
#include "dnsxray/rng.hpp"

namespace dnsxray {

using json = nlohmann::json;
using Mask = std::uint64_t;

ScoreFn score_fn(const Model& model) {
    return [&model](std::span<const double> x) { return model.predict_proba(x); };
}

BackgroundSet background_from(const Dataset& ds, std::string description) {
    return {ds.dim(), ds.values, std::move(description)};
}

std::vector<std::size_t> select_rows(const Dataset& ds, std::string_view spec, std::uint64_t seed) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw Error("ConfigInvalid", "background spec must be <class>:<count>");
    const auto cls = spec.substr(0, colon);
    std::size_t count = 0;
    try {
        const double c = parse_double(spec.substr(colon + 1));
        if (c < 1 || c != std::floor(c)) throw Error("ParseError", "");
        count = static_cast<std::size_t>(c);
    } catch (const Error&) {
        throw Error("ConfigInvalid", "background count must be a positive integer in '" + std::string(spec) + "'");
    }

    auto pick = [&](std::vector<std::size_t> rows, std::size_t n, std::uint64_t stream) {
        CounterRng rng(seed, stream);
        rng.shuffle(rows);
        rows.resize(std::min(n, rows.size()));
        return rows;
    };
    auto rows_of = [&](int label) {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (label < 0 || ds.labels[i] == label) out.push_back(i);
        return out;
    };

    std::vector<std::size_t> chosen;
    if (cls == "malicious") chosen = pick(rows_of(1), count, 0xb61);
    else if (cls == "benign") chosen = pick(rows_of(0), count, 0xb60);
    else if (cls == "all") chosen = pick(rows_of(-1), count, 0xb6a);
    else if (cls == "mixed") {
        const double mal_share = ds.empty() ? 0.0 : static_cast<double>(ds.count(1)) / static_cast<double>(ds.size());
        const auto n_mal = static_cast<std::size_t>(std::llround(mal_share * static_cast<double>(count)));
        chosen = pick(rows_of(1), n_mal, 0xb61);
        const auto benign = pick(rows_of(0), count - std::min(count, n_mal), 0xb60);
        chosen.insert(chosen.end(), benign.begin(), benign.end());
    } else {
        throw Error("ConfigInvalid", "unknown background class '" + std::string(cls) + "'");
    }
    if (chosen.empty()) throw Error("EmptyBackground", "no rows match '" + std::string(spec) + "'");
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

BackgroundSet select_background(const Dataset& ds, std::string_view spec, std::uint64_t seed) {
    const auto rows = select_rows(ds, spec, seed);
    return background_from(ds.subset(rows), std::string(spec) + " (" + std::to_string(rows.size()) + " rows)");
}

namespace {

void check_inputs(std::span<const double> x, const BackgroundSet& bg) {
    if (bg.empty()) throw Error("EmptyBackground", "background set has no rows");
    if (x.size() != bg.dim)
        throw Error("DimensionMismatch", "input has " + std::to_string(x.size()) + " values, background has " +
                                             std::to_string(bg.dim));
    if (bg.dim == 0 || bg.dim > 63) throw Error("DimensionMismatch", "feature count must be in [1, 63]");
}

/// Mean model output over the background with features in `mask` taken from x.
double masked_value(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg, Mask mask,
                    std::vector<double>& z) {
    double sum = 0.0;
    for (std::size_t b = 0; b < bg.size(); ++b) {
        const auto row = bg.row(b);
        for (std::size_t j = 0; j < bg.dim; ++j) z[j] = (mask >> j) & 1 ? x[j] : row[j];
        sum += f(z);
    }
    return sum / static_cast<double>(bg.size());
}

std::vector<double> masked_values(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg,
                                  std::span<const Mask> masks) {
    std::vector<double> out(masks.size());
    constexpr std::size_t kChunk = 64;
    const std::size_t chunks = (masks.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        std::vector<double> z(bg.dim);
        const std::size_t end = std::min(masks.size(), (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) out[i] = masked_value(f, x, bg, masks[i], z);
    });
    return out;
}

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// Calls fn(mask) for every subset of {0..m-1} with exactly k members, in
/// increasing mask order.
template <typename Fn>
void for_each_subset(std::size_t m, std::size_t k, Fn&& fn) {
    if (k == 0) {
        fn(Mask{0});
        return;
    }
    Mask mask = (Mask{1} << k) - 1;
    const Mask limit = Mask{1} << m;
    while (mask < limit) {
        fn(mask);
        const Mask low = mask & (~mask + 1);
        const Mask ripple = mask + low;
        mask = ripple | (((mask ^ ripple) >> 2) / low);
    }
}

struct Coalitions {
    std::vector<Mask> masks;
    std::vector<double> weights;
};

Coalitions all_coalitions(std::size_t m) {
    Coalitions c;
    const Mask full = (Mask{1} << m) - 1;
    for (Mask mask = 1; mask < full; ++mask) {
        const auto s = static_cast<std::size_t>(std::popcount(mask));
        c.masks.push_back(mask);
        c.weights.push_back(static_cast<double>(m - 1) / (binomial(m, s) * static_cast<double>(s * (m - s))));
    }
    return c;
}

/// Paired-size sampling: whole subset sizes are enumerated from the outside in
/// while the budget covers them, the rest are drawn with complements.
Coalitions sampled_coalitions(std::size_t m, std::size_t n_samples, std::uint64_t seed) {
    const std::size_t num_sizes = m / 2; // ceil((m - 1) / 2)
    const std::size_t num_paired = (m - 1) / 2;

    std::vector<double> weight(num_sizes);
    for (std::size_t s = 1; s <= num_sizes; ++s) {
        weight[s - 1] = static_cast<double>(m - 1) / static_cast<double>(s * (m - s));
        if (s <= num_paired) weight[s - 1] *= 2.0;
    }
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    for (auto& w : weight) w /= total;

    Coalitions c;
    const Mask full = (Mask{1} << m) - 1;
    std::size_t full_sizes = 0;
    double samples_left = static_cast<double>(n_samples);
    auto remaining = weight;
    for (std::size_t s = 1; s <= num_sizes; ++s) {
        double n_subsets = binomial(m, s);
        if (s <= num_paired) n_subsets *= 2.0;
        if (samples_left * remaining[s - 1] / n_subsets < 1.0 - 1e-8) break;
        ++full_sizes;
        samples_left -= n_subsets;
        if (const double used = remaining[s - 1]; used < 1.0)
            for (auto& r : remaining) r /= 1.0 - used;
        double w = weight[s - 1] / binomial(m, s);
        if (s <= num_paired) w /= 2.0;
        for_each_subset(m, s, [&](Mask mask) {
            c.masks.push_back(mask);
            c.weights.push_back(w);
            if (s <= num_paired) {
                c.masks.push_back(full & ~mask);
                c.weights.push_back(w);
            }
        });
    }

    if (full_sizes == num_sizes) return c;
    const std::size_t fixed = c.masks.size();
    auto left = static_cast<std::size_t>(std::max(0.0, std::round(samples_left)));
    if (left == 0) return c;

    std::vector<double> dist(weight.begin() + static_cast<std::ptrdiff_t>(full_sizes), weight.end());
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (i + full_sizes < num_paired) dist[i] /= 2.0;
    const double dist_total = std::accumulate(dist.begin(), dist.end(), 0.0);
    std::vector<double> cumulative(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) cumulative[i] = (acc += dist[i] / dist_total);

    CounterRng rng(seed, 0x5ba9);
    std::unordered_map<Mask, std::size_t> index;
    auto add = [&](Mask mask) {
        auto [it, fresh] = index.emplace(mask, c.masks.size());
        if (fresh) {
            c.masks.push_back(mask);
            c.weights.push_back(1.0);
            --left;
        } else {
            c.weights[it->second] += 1.0;
        }
    };
    std::vector<std::size_t> perm(m);
    const std::size_t max_draws = left * 4 + 1024;
    for (std::size_t draw = 0; left > 0 && draw < max_draws; ++draw) {
        const double u = rng.uniform();
        const auto pos = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        const std::size_t s = std::min(pos, dist.size() - 1) + full_sizes + 1;
        std::iota(perm.begin(), perm.end(), 0);
        Mask mask = 0;
        for (std::size_t i = 0; i < s; ++i) {
            std::swap(perm[i], perm[i + rng.below(m - i)]);
            mask |= Mask{1} << perm[i];
        }
        add(mask);
        if (left > 0 && s <= num_paired) add(full & ~mask);
    }

    double weight_left = 0.0;
    for (std::size_t s = full_sizes; s < num_sizes; ++s) weight_left += weight[s];
    double sampled_total = 0.0;
    for (std::size_t i = fixed; i < c.weights.size(); ++i) sampled_total += c.weights[i];
    for (std::size_t i = fixed; i < c.weights.size(); ++i) c.weights[i] *= weight_left / sampled_total;
    return c;
}

/// Weighted least squares with sum(phi) = fx - base imposed by eliminating the
/// last feature.
std::vector<double> solve_phi(std::size_t m, const Coalitions& c, std::span<const double> values, double base,
                              double fx) {
    std::vector<double> phi(m, 0.0);
    const double delta = fx - base;
    if (m == 1) {
        phi[0] = delta;
        return phi;
    }
    const auto rows = static_cast<Eigen::Index>(c.masks.size());
    const auto cols = static_cast<Eigen::Index>(m - 1);
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index k = 0; k < rows; ++k) {
        const Mask mask = c.masks[static_cast<std::size_t>(k)];
        const double sw = std::sqrt(c.weights[static_cast<std::size_t>(k)]);
        const double last = static_cast<double>((mask >> (m - 1)) & 1);
        for (Eigen::Index j = 0; j < cols; ++j) a(k, j) = sw * (static_cast<double>((mask >> j) & 1) - last);
        b(k) = sw * (values[static_cast<std::size_t>(k)] - base - last * delta);
    }
    const Eigen::VectorXd beta = a.completeOrthogonalDecomposition().solve(b);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        phi[static_cast<std::size_t>(j)] = beta(j);
        sum += beta(j);
    }
    phi[m - 1] = delta - sum;
    return phi;
}

} // namespace

Attribution kernel_shap(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg, std::size_t budget,
                        std::uint64_t seed) {
    check_inputs(x, bg);
    const std::size_t m = bg.dim;
    const bool exact = m <= kMaxExactFeatures || (m < 63 && budget >= (std::size_t{1} << m));
    if (!exact && budget < 2 * m + 2)
        throw Error("BudgetTooSmall", "budget " + std::to_string(budget) + " below " + std::to_string(2 * m + 2) +
                                          " for " + std::to_string(m) + " features");

    const Coalitions c = exact ? all_coalitions(m) : sampled_coalitions(m, budget - 2, seed);
    std::vector<Mask> masks = c.masks;
    masks.push_back(0);
    masks.push_back((Mask{1} << m) - 1);
    const auto values = masked_values(f, x, bg, masks);

    Attribution a;
    a.base_value = values[values.size() - 2];
    a.model_output = f(x);
    a.exact = exact;
    a.coalitions_used = masks.size();
    a.phi = solve_phi(m, c, std::span(values).first(c.masks.size()), a.base_value, a.model_output);
    return a;
}

Attribution kernel_shap(const Model& model, std::span<const double> x, const BackgroundSet& bg, std::size_t budget,
                        std::uint64_t seed) {
    if (model.dim() != bg.dim)
        throw Error("DimensionMismatch", "model expects " + std::to_string(model.dim()) + " features, background has " +
                                             std::to_string(bg.dim));
    return kernel_shap(score_fn(model), x, bg, budget, seed);
}

std::vector<double> exact_shapley_oracle(const ScoreFn& f, std::span<const double> x, const BackgroundSet& bg) {
    check_inputs(x, bg);
    const std::size_t m = bg.dim;
    if (m > kMaxExactFeatures)
        throw Error("TooManyFeatures", std::to_string(m) + " features exceed the limit of " + std::to_string(kMaxExactFeatures));
    const Mask n_masks = Mask{1} << m;
    std::vector<Mask> masks(n_masks);
    std::iota(masks.begin(), masks.end(), Mask{0});
    const auto v = masked_values(f, x, bg, masks);

    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> phi(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        for (Mask s = 0; s < n_masks; ++s) {
            if ((s >> j) & 1) continue;
            const auto size = static_cast<std::size_t>(std::popcount(s));
            const double w = fact[size] * fact[m - size - 1] / fact[m];
            phi[j] += w * (v[s | (Mask{1} << j)] - v[s]);
        }
    return phi;
}

SummaryTable summary(const Model& model, const Dataset& samples, const BackgroundSet& bg, std::size_t budget,
                     std::uint64_t seed) {
    if (samples.empty()) throw Error("EmptyDataset", "no samples to explain");
    SummaryTable table;
    table.attributions.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        table.attributions[i] = kernel_shap(model, samples.row(i), bg, budget, seed);
        table.attributions[i].domain = samples.domains[i];
    });

    const auto& norm = model.normalization();
    const std::size_t m = model.dim();
    for (std::size_t j = 0; j < m; ++j) {
        SummaryEntry e;
        e.feature = model.feature_names()[j];
        e.index = j;
        double sum = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double phi = table.attributions[i].phi[j];
            sum += std::abs(phi);
            const double raw = samples.row(i)[j];
            e.points.emplace_back(phi, norm.empty() ? raw : norm.apply(j, raw));
        }
        e.mean_abs_phi = sum / static_cast<double>(samples.size());
        table.entries.push_back(std::move(e));
    }
    std::stable_sort(table.entries.begin(), table.entries.end(),
                     [](const SummaryEntry& a, const SummaryEntry& b) { return a.mean_abs_phi > b.mean_abs_phi; });
    return table;
}

std::vector<double> quantile_grid(std::vector<double> values, std::size_t grid_size) {
    std::vector<double> grid;
    if (values.empty() || grid_size == 0) return grid;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double q = grid_size == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(grid_size - 1);
        auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        rank = std::clamp<std::size_t>(rank, 1, n);
        const double v = values[rank - 1];
        if (grid.empty() || v > grid.back()) grid.push_back(v);
    }
    return grid;
}

PdpCurve pdp(const ScoreFn& f, std::span<const std::string> feature_names, std::string_view feature,
             const BackgroundSet& bg, std::size_t grid_size) {
    const auto it = std::find(feature_names.begin(), feature_names.end(), feature);
    if (it == feature_names.end()) throw Error("UnknownFeature", "'" + std::string(feature) + "'");
    if (bg.empty()) throw Error("EmptyBackground", "background set has no rows");
    if (feature_names.size() != bg.dim) throw Error("DimensionMismatch", "feature names do not match background width");

    PdpCurve curve;
    curve.feature = std::string(feature);
    curve.index = static_cast<std::size_t>(it - feature_names.begin());
    const std::size_t j = curve.index;
    const std::size_t n = bg.size();

    std::vector<double> column(n);
    std::vector<double> base(n);
    for (std::size_t b = 0; b < n; ++b) column[b] = bg.row(b)[j];
    parallel_for(n, [&](std::size_t b) { base[b] = f(bg.row(b)); });
    curve.expected_feature_value = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(n);
    curve.expected_output = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(n);
    curve.grid = quantile_grid(column, grid_size);

    curve.mean_output.resize(curve.grid.size());
    parallel_for(curve.grid.size(), [&](std::size_t g) {
        std::vector<double> z(bg.dim);
        double sum = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const auto row = bg.row(b);
            std::copy(row.begin(), row.end(), z.begin());
            z[j] = curve.grid[g];
            sum += f(z);
        }
        curve.mean_output[g] = sum / static_cast<double>(n);
    });
    return curve;
}

PdpCurve pdp(const Model& model, std::string_view feature, const BackgroundSet& bg, std::size_t grid_size) {
    return pdp(score_fn(model), model.feature_names(), feature, bg, grid_size);
}

ForceRecord force(const Attribution& attribution, std::span<const std::string> feature_names,
                  std::span<const double> values) {
    ForceRecord r;
    r.domain = attribution.domain;
    r.base_value = attribution.base_value;
    r.model_output = attribution.model_output;
    for (std::size_t j = 0; j < attribution.phi.size(); ++j) {
        const double phi = attribution.phi[j];
        if (phi == 0.0) continue;
        ForceEntry e{j < feature_names.size() ? feature_names[j] : "f" + std::to_string(j), j, phi,
                     j < values.size() ? values[j] : 0.0};
        (phi < 0.0 ? r.benign : r.malicious).push_back(std::move(e));
    }
    auto by_magnitude = [](const ForceEntry& a, const ForceEntry& b) { return std::abs(a.phi) > std::abs(b.phi); };
    std::stable_sort(r.benign.begin(), r.benign.end(), by_magnitude);
    std::stable_sort(r.malicious.begin(), r.malicious.end(), by_magnitude);
    return r;
}

std::string format_attributions_csv(std::span<const Attribution> rows, std::span<const std::string> feature_names) {
    std::string out = "domain,base,output";
    for (const auto& n : feature_names) out += ",phi_" + n;
    out += '\n';
    for (const auto& a : rows) {
        out += a.domain + ',' + format_double(a.base_value) + ',' + format_double(a.model_output);
        for (double p : a.phi) out += ',' + format_double(p);
        out += '\n';
    }
    return out;
}

std::string format_pdp_csv(std::span<const PdpCurve> curves, const Normalization& norm) {
    std::string out = "feature,grid_value,mean_output\n";
    for (const auto& c : curves)
        for (std::size_t g = 0; g < c.grid.size(); ++g) {
            const double v = norm.empty() ? c.grid[g] : norm.apply(c.index, c.grid[g]);
            out += c.feature + ',' + format_double(v) + ',' + format_double(c.mean_output[g]) + '\n';
        }
    return out;
}

json summary_to_json(const SummaryTable& table) {
    json out = json::array();
    for (const auto& e : table.entries) {
        json points = json::array();
        for (const auto& [phi, value] : e.points) points.push_back({phi, value});
        out.push_back({{"feature", e.feature}, {"mean_abs_phi", e.mean_abs_phi}, {"points", std::move(points)}});
    }
    return out;
}

json force_to_json(const ForceRecord& record) {
    auto side = [](const std::vector<ForceEntry>& entries) {
        json out = json::array();
        for (const auto& e : entries) out.push_back({{"feature", e.feature}, {"phi", e.phi}, {"value", e.value}});
        return out;
    };
    return {{"domain", record.domain},
            {"base_value", record.base_value},
            {"model_output", record.model_output},
            {"benign", side(record.benign)},
            {"malicious", side(record.malicious)}};
}

} // namespace dnsxray
