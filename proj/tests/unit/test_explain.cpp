#include <doctest.h>

#include <cmath>

#include "dnsxray/error.hpp"
#include "dnsxray/explain.hpp"
#include "shap_oracle.hpp"
#include "test_util.hpp"

using namespace dnsxray;

namespace {

BackgroundSet random_background(std::size_t dim, std::size_t rows, std::uint64_t seed) {
    CounterRng rng(seed, 0xb9);
    BackgroundSet bg;
    bg.dim = dim;
    for (std::size_t i = 0; i < dim * rows; ++i) bg.values.push_back(rng.normal());
    return bg;
}

std::vector<double> random_point(std::size_t dim, std::uint64_t seed) {
    CounterRng rng(seed, 0x9e);
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal() * 1.5;
    return x;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

/// Decision tree of the given depth trained on random labeled points.
Model toy_tree(std::size_t dim, int depth, std::uint64_t seed) {
    CounterRng rng(seed, 0x70);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 300; ++i) {
        std::vector<double> x(dim);
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            x[j] = rng.normal();
            s += x[j] * static_cast<double>(j % 3 + 1);
        }
        rows.push_back(std::move(x));
        labels.push_back(s + rng.normal() > 0 ? 1 : 0);
    }
    return train_decision_tree(testing::make_dataset(dim, rows, labels), {Criterion::gini, depth});
}

} // namespace

TEST_CASE("exact mode matches the permutation oracle on an 8-feature tree") {
    auto model = toy_tree(8, 6, 1);
    auto bg = random_background(8, 12, 2);
    for (std::uint64_t s = 0; s < 3; ++s) {
        auto x = random_point(8, s);
        auto a = kernel_shap(model, x, bg, 2048, 1);
        CHECK(a.exact);
        auto oracle = testing::permutation_shapley(score_fn(model), x, bg);
        CHECK(max_diff(a.phi, oracle) <= 1e-6);
        CHECK(max_diff(exact_shapley_oracle(score_fn(model), x, bg), oracle) <= 1e-9);
    }
}

TEST_CASE("toy models of several widths match the permutation oracle") {
    for (std::size_t m : {1, 2, 3, 5, 8}) {
        for (std::uint64_t s = 0; s < 2; ++s) {
            auto model = toy_tree(m, 4, 10 + m + s);
            auto bg = random_background(m, 7, 20 + s);
            auto x = random_point(m, 30 + s);
            auto oracle = testing::permutation_shapley(score_fn(model), x, bg);
            CHECK(max_diff(kernel_shap(model, x, bg, 64, 3).phi, oracle) <= 1e-6);
        }
    }
}

TEST_CASE("an AND tree has hand-computed values") {
    const ScoreFn f = [](std::span<const double> x) { return x[0] > 0.5 && x[1] > 0.5 ? 1.0 : 0.0; };
    const std::vector<double> x{1, 1, 1};

    BackgroundSet zero{3, {0, 0, 0}, ""};
    auto a = kernel_shap(f, x, zero, 64, 1);
    CHECK(a.phi[0] == doctest::Approx(0.5));
    CHECK(a.phi[1] == doctest::Approx(0.5));
    CHECK(a.phi[2] == doctest::Approx(0.0));

    // v({}) = 0, v({0}) = 0, v({1}) = 1/2, v({0,1}) = 1
    BackgroundSet two{3, {0, 0, 0, 1, 0, 0}, ""};
    auto b = kernel_shap(f, x, two, 64, 1);
    CHECK(b.base_value == 0.0);
    CHECK(b.phi[0] == doctest::Approx(0.25));
    CHECK(b.phi[1] == doctest::Approx(0.75));
    CHECK(b.phi[2] == doctest::Approx(0.0));
    auto o = exact_shapley_oracle(f, x, two);
    CHECK(o[0] == doctest::Approx(0.25));
    CHECK(o[1] == doctest::Approx(0.75));
}

TEST_CASE("dummy and efficiency: f(x) = x_j") {
    auto bg = random_background(5, 9, 4);
    auto x = random_point(5, 5);
    const ScoreFn f = [](std::span<const double> z) { return z[2]; };
    double mean = 0.0;
    for (std::size_t b = 0; b < bg.size(); ++b) mean += bg.row(b)[2];
    mean /= static_cast<double>(bg.size());
    auto a = kernel_shap(f, x, bg, 64, 1);
    for (std::size_t j = 0; j < 5; ++j) CHECK(a.phi[j] == doctest::Approx(j == 2 ? x[2] - mean : 0.0));
    CHECK(a.base_value == doctest::Approx(mean));
}

TEST_CASE("symmetry: equal contributions for f = x_1 + x_2") {
    BackgroundSet bg{3, {-1, 1, 0, 1, -1, 0, 0, 0, 5, 2, 2, 1}, ""};
    const std::vector<double> x{0.7, 0.7, 3.0};
    const ScoreFn f = [](std::span<const double> z) { return z[0] + z[1]; };
    auto a = kernel_shap(f, x, bg, 64, 1);
    CHECK(a.phi[0] == doctest::Approx(a.phi[1]));
    CHECK(a.phi[2] == doctest::Approx(0.0));
}

TEST_CASE("null player and single feature") {
    auto bg = random_background(4, 5, 7);
    auto x = random_point(4, 8);
    const ScoreFn constant = [](std::span<const double>) { return 0.3; };
    for (double p : exact_shapley_oracle(constant, x, bg)) CHECK(p == doctest::Approx(0.0));
    for (double p : kernel_shap(constant, x, bg, 64, 1).phi) CHECK(p == doctest::Approx(0.0));

    auto bg1 = random_background(1, 6, 9);
    const std::vector<double> x1{2.0};
    const ScoreFn sq = [](std::span<const double> z) { return z[0] * z[0]; };
    auto a = kernel_shap(sq, x1, bg1, 64, 1);
    CHECK(a.phi[0] == doctest::Approx(a.model_output - a.base_value));
    CHECK(exact_shapley_oracle(sq, x1, bg1)[0] == doctest::Approx(a.model_output - a.base_value));
}

TEST_CASE("sampled mode is close to exact forest values at 24 features") {
    CounterRng rng(3, 3);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 400; ++i) {
        std::vector<double> x(24);
        double s = 0.0;
        for (std::size_t j = 0; j < 24; ++j) {
            x[j] = rng.normal();
            if (j < 6) s += x[j];
        }
        rows.push_back(std::move(x));
        labels.push_back(s > 0 ? 1 : 0);
    }
    auto ds = testing::make_dataset(24, rows, labels);
    auto model = train_random_forest(ds, {Criterion::gini, 4, 25, true, 0}, 5);
    auto bg = background_from(ds.subset(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15,
                                                                  16, 17, 18, 19}));
    for (std::size_t i = 100; i < 103; ++i) {
        auto a = kernel_shap(model, ds.row(i), bg, 2048, 11);
        CHECK_FALSE(a.exact);
        CHECK(a.coalitions_used == 2048);
        auto truth = testing::forest_shapley(model, ds.row(i), bg);
        CHECK(max_diff(a.phi, truth) <= 1e-2);
        double total = a.base_value;
        for (double p : a.phi) total += p;
        CHECK(total == doctest::Approx(a.model_output).epsilon(1e-9));
    }
}

TEST_CASE("limits and errors") {
    auto bg13 = random_background(13, 3, 1);
    auto x13 = random_point(13, 1);
    const ScoreFn f = [](std::span<const double> z) { return z[0]; };
    CHECK_THROWS_WITH_AS(exact_shapley_oracle(f, x13, bg13), doctest::Contains("TooManyFeatures"), Error);
    CHECK_THROWS_WITH_AS(kernel_shap(f, x13, bg13, 27, 1), doctest::Contains("BudgetTooSmall"), Error);
    CHECK_NOTHROW(kernel_shap(f, x13, bg13, 28, 1));
    CHECK_THROWS_WITH_AS(kernel_shap(f, random_point(4, 1), bg13, 64, 1), doctest::Contains("DimensionMismatch"),
                         Error);
    CHECK_THROWS_WITH_AS(kernel_shap(f, x13, BackgroundSet{13, {}, ""}, 64, 1), doctest::Contains("EmptyBackground"),
                         Error);
}

TEST_CASE("sampled attributions are deterministic in the seed") {
    auto bg = random_background(16, 6, 2);
    auto x = random_point(16, 3);
    const ScoreFn f = [](std::span<const double> z) { return std::tanh(z[0] * z[1] + z[5] - z[9] * 0.5); };
    auto a = kernel_shap(f, x, bg, 300, 4);
    auto b = kernel_shap(f, x, bg, 300, 4);
    CHECK(a.phi == b.phi);
}

TEST_CASE("summary ranking and background duplication") {
    auto model = toy_tree(4, 3, 2);
    auto samples = testing::make_dataset(4, {{0.1, 0.2, 0.3, 0.4}, {-1, 1, -1, 1}, {2, 0, 0, 2}}, {0, 1, 0});
    auto bg = random_background(4, 6, 5);
    auto doubled = bg;
    doubled.values.insert(doubled.values.end(), bg.values.begin(), bg.values.end());
    auto a = summary(model, samples, bg, 64, 1);
    auto b = summary(model, samples, doubled, 64, 1);
    REQUIRE(a.entries.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(a.entries[k].feature == b.entries[k].feature);
        CHECK(a.entries[k].mean_abs_phi == doctest::Approx(b.entries[k].mean_abs_phi));
        if (k > 0) CHECK(a.entries[k - 1].mean_abs_phi >= a.entries[k].mean_abs_phi);
    }
    CHECK(a.attributions[1].domain == "d1.com");

    const std::vector<std::string> names{"f0", "f1", "f2", "f3"};
    RandomForestModel flat;
    flat.trees.push_back(DecisionTree{{TreeNode{.p_malicious = 0.4, .weight = 1.0}}});
    auto ignore = summary(Model(flat, {}, names), samples, bg, 64, 1);
    for (const auto& e : ignore.entries) CHECK(e.mean_abs_phi <= 1e-12);

    DecisionTree one;
    one.nodes = {TreeNode{.feature = 3, .threshold = 0.5, .left = 1, .right = 2}, TreeNode{.p_malicious = 0.0},
                 TreeNode{.p_malicious = 1.0}};
    auto single = summary(Model(DecisionTreeModel{one, {}}, {}, names), samples, bg, 64, 1);
    CHECK(single.entries[0].feature == "f3");

    CHECK_THROWS_WITH_AS(summary(model, testing::make_dataset(4, {}, {}), bg, 64, 1),
                         doctest::Contains("EmptyDataset"), Error);
}

TEST_CASE("partial dependence of simple functions") {
    auto bg = random_background(3, 25, 6);
    const std::vector<std::string> names{"a", "b", "c"};
    const ScoreFn constant = [](std::span<const double>) { return 0.7; };
    auto flat = pdp(constant, names, "b", bg, 10);
    for (double v : flat.mean_output) CHECK(v == doctest::Approx(0.7));

    const ScoreFn ident = [](std::span<const double> z) { return z[1]; };
    auto line = pdp(ident, names, "b", bg, 10);
    REQUIRE(line.grid.size() == line.mean_output.size());
    for (std::size_t g = 0; g < line.grid.size(); ++g) CHECK(line.mean_output[g] == doctest::Approx(line.grid[g]));
    CHECK(std::is_sorted(line.grid.begin(), line.grid.end()));

    CHECK_THROWS_WITH_AS(pdp(ident, names, "zz", bg, 10), doctest::Contains("UnknownFeature"), Error);
    CHECK_THROWS_WITH_AS(pdp(ident, names, "a", BackgroundSet{3, {}, ""}, 10), doctest::Contains("EmptyBackground"),
                         Error);
}

TEST_CASE("quantile grid is deduplicated nearest-rank") {
    CHECK(quantile_grid({3, 1, 2, 4, 5}, 5) == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(quantile_grid({0, 0, 0, 1}, 20) == std::vector<double>{0, 1});
    CHECK(quantile_grid({}, 5).empty());
    CHECK(quantile_grid({7}, 3) == std::vector<double>{7});
}

TEST_CASE("force record sides") {
    const std::vector<std::string> names{"a", "b", "c"};
    Attribution zero;
    zero.base_value = 0.4;
    zero.model_output = 0.4;
    zero.phi = {0, 0, 0};
    auto r = force(zero, names);
    CHECK(r.benign.empty());
    CHECK(r.malicious.empty());
    CHECK(r.model_output == r.base_value);

    Attribution one = zero;
    one.phi = {0, 0.2, 0};
    one.model_output = 0.6;
    auto s = force(one, names);
    CHECK(s.benign.empty());
    REQUIRE(s.malicious.size() == 1);
    CHECK(s.malicious[0].feature == "b");

    Attribution mix = zero;
    mix.phi = {-0.1, 0.3, -0.2};
    auto t = force(mix, names, std::vector<double>{1, 2, 3});
    REQUIRE(t.benign.size() == 2);
    CHECK(t.benign[0].feature == "c");
    CHECK(t.benign[0].value == 3);
    CHECK(t.malicious[0].feature == "b");
}

TEST_CASE("background selection") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        rows.push_back({static_cast<double>(i)});
        labels.push_back(i < 30 ? 0 : 1);
    }
    auto ds = testing::make_dataset(1, rows, labels);
    auto mal = select_rows(ds, "malicious:1000", 1);
    CHECK(mal.size() == 10);
    for (auto i : mal) CHECK(ds.labels[i] == 1);
    auto mixed = select_rows(ds, "mixed:20", 1);
    CHECK(mixed.size() == 20);
    std::size_t m = 0;
    for (auto i : mixed) m += ds.labels[i];
    CHECK(m == 5);
    CHECK(select_rows(ds, "all:7", 3) == select_rows(ds, "all:7", 3));
    CHECK(select_background(ds, "benign:4", 1).size() == 4);
    CHECK_THROWS_WITH_AS(select_rows(ds, "evil:3", 1), doctest::Contains("ConfigInvalid"), Error);
    CHECK_THROWS_WITH_AS(select_rows(ds, "all:x", 1), doctest::Contains("ConfigInvalid"), Error);
    auto benign_only = testing::make_dataset(1, {{0}, {1}}, {0, 0});
    CHECK_THROWS_WITH_AS(select_rows(benign_only, "malicious:5", 1), doctest::Contains("EmptyBackground"), Error);
}

TEST_CASE("attribution CSV layout") {
    Attribution a;
    a.domain = "x.com";
    a.base_value = 0.5;
    a.model_output = 1;
    a.phi = {0.25, 0.25};
    const std::vector<std::string> names{"p", "q"};
    CHECK(format_attributions_csv(std::vector<Attribution>{a}, names) ==
          "domain,base,output,phi_p,phi_q\nx.com,0.5,1,0.25,0.25\n");
}
