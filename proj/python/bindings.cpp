#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dnsxray/commands.hpp"
#include "dnsxray/error.hpp"
#include "dnsxray/explain.hpp"
#include "dnsxray/features.hpp"
#include "dnsxray/metrics.hpp"
#include "dnsxray/models.hpp"

namespace py = pybind11;
using namespace dnsxray;

namespace {

using OptPath = std::optional<std::filesystem::path>;

CommonOptions common(const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed, const OptPath& config,
                     bool force) {
    CommonOptions c;
    c.out_dir = out_dir;
    c.seed = seed.value_or(1);
    c.seed_given = seed.has_value();
    c.config = config;
    c.force = force;
    return c;
}

/// Runs a command without the GIL and returns its manifest as JSON text.
template <typename Options, typename Fn>
std::string run(const Options& opts, Fn fn) {
    RunManifest m;
    {
        py::gil_scoped_release release;
        m = fn(opts);
    }
    return m.to_json().dump();
}

BackgroundSet background_rows(const std::vector<std::vector<double>>& rows) {
    BackgroundSet bg;
    bg.description = "python rows";
    if (rows.empty()) return bg;
    bg.dim = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != bg.dim) throw Error("DimensionMismatch", "background rows differ in width");
        bg.values.insert(bg.values.end(), r.begin(), r.end());
    }
    return bg;
}

py::dict attribution_dict(const Attribution& a) {
    py::dict d;
    d["base_value"] = a.base_value;
    d["phi"] = a.phi;
    d["model_output"] = a.model_output;
    d["coalitions_used"] = a.coalitions_used;
    d["exact"] = a.exact;
    return d;
}

} // namespace

PYBIND11_MODULE(_dnsxray, m) {
    m.doc() = "Passive DNS feature extraction, DGA classifiers and Shapley explanations.";
    m.attr("__version__") = kToolVersion;

    static py::exception<Error> error(m, "DnsxrayError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object instance = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
            instance.attr("kind") = e.kind();
            instance.attr("detail") = e.detail();
            PyErr_SetObject(error.ptr(), instance.ptr());
        }
    });

    m.def("feature_names", [] {
        std::vector<std::string> out;
        for (auto n : feature_names()) out.emplace_back(n);
        return out;
    });

    m.def("ttl_features", [](const std::vector<std::uint32_t>& ttls) { return ttl_features(ttls); }, py::arg("ttls"));

    m.def("roc_auc",
          [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
              return roc_curve(scores, labels).auc;
          },
          py::arg("scores"), py::arg("labels"));

    m.def("kernel_shap",
          [](py::function f, const std::vector<double>& x, const std::vector<std::vector<double>>& background,
             std::size_t budget, std::uint64_t seed) {
              const ScoreFn score = [f](std::span<const double> z) {
                  py::gil_scoped_acquire acquire;
                  return f(std::vector<double>(z.begin(), z.end())).cast<double>();
              };
              const auto bg = background_rows(background);
              Attribution a;
              {
                  py::gil_scoped_release release;
                  a = kernel_shap(score, x, bg, budget, seed);
              }
              return attribution_dict(a);
          },
          py::arg("f"), py::arg("x"), py::arg("background"), py::arg("budget") = 2048, py::arg("seed") = 1);

    py::class_<Model>(m, "Model")
        .def_static("load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"))
        .def_property_readonly("kind", [](const Model& self) { return std::string(to_string(self.kind())); })
        .def_property_readonly("feature_names", &Model::feature_names)
        .def_property_readonly("dim", &Model::dim)
        .def("predict_proba", [](const Model& self, const std::vector<double>& x) { return self.predict_proba(x); },
             py::arg("x"))
        .def("explain",
             [](const Model& self, const std::vector<double>& x, const std::vector<std::vector<double>>& background,
                std::size_t budget, std::uint64_t seed) {
                 const auto bg = background_rows(background);
                 Attribution a;
                 {
                     py::gil_scoped_release release;
                     a = kernel_shap(self, x, bg, budget, seed);
                 }
                 return attribution_dict(a);
             },
             py::arg("x"), py::arg("background"), py::arg("budget") = 2048, py::arg("seed") = 1);

    m.def("synth",
          [](const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed, const OptPath& config, bool pcap,
             bool force) {
              SynthOptions o;
              o.common = common(out_dir, seed, config, force);
              o.pcap = pcap;
              return run(o, cmd_synth);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("seed") = py::none(), py::arg("config") = py::none(),
          py::arg("pcap") = false, py::arg("force") = false);

    m.def("extract",
          [](const std::filesystem::path& out_dir, const std::filesystem::path& traffic,
             const std::filesystem::path& allow, const std::filesystem::path& block, const OptPath& geo,
             const OptPath& rdns, const OptPath& dictionary, std::optional<std::int64_t> window_start,
             std::optional<std::int64_t> window_end, std::optional<int> day, bool whole_name, const OptPath& config,
             bool force) {
              ExtractOptions o;
              o.common = common(out_dir, std::nullopt, config, force);
              o.traffic = traffic;
              o.allow = allow;
              o.block = block;
              o.geo = geo;
              o.rdns = rdns;
              o.dictionary = dictionary;
              o.window_start = window_start;
              o.window_end = window_end;
              o.day = day;
              o.whole_name = whole_name;
              return run(o, cmd_extract);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("traffic"), py::arg("allow"), py::arg("block"),
          py::arg("geo") = py::none(), py::arg("rdns") = py::none(), py::arg("dictionary") = py::none(),
          py::arg("window_start") = py::none(), py::arg("window_end") = py::none(), py::arg("day") = py::none(),
          py::arg("whole_name") = false, py::arg("config") = py::none(), py::arg("force") = false);

    m.def("train",
          [](const std::filesystem::path& out_dir, const std::filesystem::path& features, const std::string& model,
             std::optional<std::string> params, std::optional<std::string> grid, std::size_t folds, bool balance,
             double holdout, std::optional<std::uint64_t> seed, const OptPath& config, bool force) {
              TrainOptions o;
              o.common = common(out_dir, seed, config, force);
              o.features = features;
              o.kind = model;
              o.params = std::move(params);
              o.grid = std::move(grid);
              o.folds = folds;
              o.balance = balance;
              o.holdout = holdout;
              return run(o, cmd_train);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("features"), py::arg("model") = "random_forest",
          py::arg("params") = py::none(), py::arg("grid") = py::none(), py::arg("folds") = 5,
          py::arg("balance") = false, py::arg("holdout") = 0.3, py::arg("seed") = py::none(),
          py::arg("config") = py::none(), py::arg("force") = false);

    m.def("evaluate",
          [](const std::filesystem::path& out_dir, const std::vector<std::filesystem::path>& models,
             const std::filesystem::path& features, bool force) {
              EvaluateOptions o;
              o.common = common(out_dir, std::nullopt, std::nullopt, force);
              o.models = models;
              o.features = features;
              return run(o, cmd_evaluate);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("models"), py::arg("features"), py::arg("force") = false);

    m.def("explain",
          [](const std::filesystem::path& out_dir, const std::filesystem::path& model,
             const std::filesystem::path& features, const std::string& mode, std::vector<std::string> targets,
             std::vector<std::string> pdp_features, std::optional<std::string> background, const std::string& samples,
             std::size_t budget, std::size_t top, std::size_t grid_size, std::optional<std::uint64_t> seed,
             bool force) {
              ExplainOptions o;
              o.common = common(out_dir, seed, std::nullopt, force);
              o.model = model;
              o.features = features;
              o.mode = mode;
              o.targets = std::move(targets);
              o.pdp_features = std::move(pdp_features);
              o.background = std::move(background);
              o.samples = samples;
              o.budget = budget;
              o.top = top;
              o.grid_size = grid_size;
              return run(o, cmd_explain);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("model"), py::arg("features"), py::arg("mode") = "summary",
          py::arg("targets") = std::vector<std::string>{}, py::arg("pdp_features") = std::vector<std::string>{},
          py::arg("background") = py::none(), py::arg("samples") = "all:100", py::arg("budget") = 2048,
          py::arg("top") = 20, py::arg("grid_size") = 20, py::arg("seed") = py::none(), py::arg("force") = false);

    m.def("pairs",
          [](const std::filesystem::path& out_dir, const std::filesystem::path& features,
             std::vector<std::string> pairs, bool force) {
              PairsOptions o;
              o.common = common(out_dir, std::nullopt, std::nullopt, force);
              o.features = features;
              o.pairs = std::move(pairs);
              return run(o, cmd_pairs);
          },
          py::arg("out_dir"), py::kw_only(), py::arg("features"), py::arg("pairs") = std::vector<std::string>{},
          py::arg("force") = false);
}
