#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/backbone.hpp"
#include "norin/errors.hpp"
#include "norin/harness.hpp"
#include "norin/normalizers.hpp"
#include "norin/series.hpp"
#include "norin/shape_fit.hpp"
#include "norin/shape_search.hpp"

namespace py = pybind11;
using namespace norin;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
    if (o.is_none()) return nlohmann::json::object();
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

using Vec = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const Vec& a) { return {a.data(), a.data() + a.size()}; }

Vec map_elementwise(const Vec& x, const std::function<double(double)>& f) {
    Vec out(x.request().shape);
    auto* o = out.mutable_data();
    const auto* in = x.data();
    for (py::ssize_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
    return out;
}

MultiSeries series_from(const py::object& data, const std::optional<std::string>& timestamp_column) {
    if (py::isinstance<py::str>(data)) return load_series(data.cast<std::string>(), timestamp_column);
    const auto a = py::cast<Vec>(data);
    if (a.ndim() != 2) throw DataError("series array must be 2-D (length, channels)");
    MultiSeries s;
    s.values = Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), s.values.data.begin());
    for (py::ssize_t c = 0; c < a.shape(1); ++c) s.channel_names.push_back("c" + std::to_string(c));
    s.validate();
    return s;
}

Vec series_array(const MultiSeries& s) {
    Vec out({static_cast<py::ssize_t>(s.length()), static_cast<py::ssize_t>(s.channels())});
    std::copy(s.values.data.begin(), s.values.data.end(), out.mutable_data());
    return out;
}

SplitSpec split_from(const std::vector<double>& f) {
    if (f.size() != 3) throw DataError("split needs three fractions");
    SplitSpec s{f[0], f[1], f[2]};
    s.validate();
    return s;
}

ShapeParams shape_for(const py::object& shape, std::size_t C) {
    if (shape.is_none()) return ShapeParams::shared_pair(C, 1.0, 0.0);
    if (py::isinstance<py::tuple>(shape) || py::isinstance<py::list>(shape)) {
        const auto pair = shape.cast<std::pair<double, double>>();
        return ShapeParams::shared_pair(C, pair.first, pair.second);
    }
    return shape_from_json(from_py(shape));
}

}  // namespace

PYBIND11_MODULE(norin, m) {
    m.doc() = "Johnson-SU reversible instance normalization for linear forecasters";

    static py::exception<DataError> data_error(m, "DataError", PyExc_ValueError);
    static py::exception<RunError> run_error(m, "RunError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const RunError& e) {
            py::set_error(run_error, e.what());
        }
    });

    m.def(
        "jsu_forward",
        [](const Vec& x, double delta, double epsilon, double loc, double scale) {
            ShapeParams::shared_pair(1, delta, epsilon).validate();
            if (!(scale > 0.0)) throw DataError("scale must be positive");
            return map_elementwise(x, [&](double v) { return jsu_forward_scalar(v, delta, epsilon, loc, scale); });
        },
        py::arg("x"), py::arg("delta"), py::arg("epsilon"), py::arg("loc") = 0.0, py::arg("scale") = 1.0,
        "z = epsilon + delta * asinh((x - loc) / scale), elementwise");
    m.def(
        "jsu_inverse",
        [](const Vec& z, double delta, double epsilon, double loc, double scale) {
            ShapeParams::shared_pair(1, delta, epsilon).validate();
            if (!(scale > 0.0)) throw DataError("scale must be positive");
            return map_elementwise(z, [&](double v) { return jsu_inverse_scalar(v, delta, epsilon, loc, scale); });
        },
        py::arg("z"), py::arg("delta"), py::arg("epsilon"), py::arg("loc") = 0.0, py::arg("scale") = 1.0,
        "x = loc + scale * sinh((z - epsilon) / delta), elementwise");

    m.def(
        "moments",
        [](const Vec& x) {
            const auto v = to_vec(x);
            const auto s = moments(v);
            py::dict d;
            d["mean"] = s.mean;
            d["variance"] = s.variance;
            d["skewness"] = s.skewness ? py::cast(*s.skewness) : py::none();
            d["kurtosis"] = s.kurtosis ? py::cast(*s.kurtosis) : py::none();
            return d;
        },
        py::arg("x"));

    m.def(
        "fit_shape",
        [](const Vec& sample, double z) {
            const auto v = to_vec(sample);
            const auto f = slifker_shapiro_fit(v, z);
            py::dict d;
            d["family"] = to_string(f.family);
            d["has_shape"] = f.has_shape;
            d["delta"] = f.delta;
            d["epsilon"] = f.epsilon;
            d["loc"] = f.loc_fit;
            d["scale"] = f.scale_fit;
            d["ratio"] = f.ratio;
            d["degenerate"] = f.degenerate;
            return d;
        },
        py::arg("sample"), py::arg("z") = kDefaultProbeZ, "closed-form Johnson fit of a 1-D sample");

    m.def(
        "load_series",
        [](const std::string& source, std::optional<std::string> timestamp_column) {
            const auto s = load_series(source, timestamp_column);
            return py::make_tuple(series_array(s), s.channel_names);
        },
        py::arg("source"), py::arg("timestamp_column") = "date",
        "CSV path or synth:key=value,... spec -> (values[L, C], channel names)");

    m.def(
        "warm_start",
        [](const py::object& data, const std::string& mode, double z, std::vector<double> split,
           std::optional<std::string> timestamp_column) {
            const auto s = series_from(data, timestamp_column);
            return to_py(fit_report_json(warm_start(s, split_from(split), shape_mode_from_string(mode), z)));
        },
        py::arg("data"), py::arg("mode") = "shared", py::arg("z") = kDefaultProbeZ,
        py::arg("split") = std::vector<double>{0.7, 0.1, 0.2}, py::arg("timestamp_column") = "date");

    m.def(
        "train",
        [](const py::object& data, const std::string& normalizer, const py::object& shape, const py::object& config,
           std::vector<double> split, std::optional<std::string> timestamp_column) {
            const auto s = series_from(data, timestamp_column);
            const auto cfg = train_config_from_json(from_py(config));
            const auto col = parse_column(normalizer, ShapeSource::Explicit);
            const auto run = train(s, split_from(split), col.normalizer, shape_for(shape, s.channels()), cfg);
            return to_py(to_json(run));
        },
        py::arg("data"), py::arg("normalizer") = "norin", py::arg("shape") = py::none(),
        py::arg("config") = py::none(), py::arg("split") = std::vector<double>{0.7, 0.1, 0.2},
        py::arg("timestamp_column") = "date",
        "one training run; shape is (delta, epsilon), a shape dict, or None for (1, 0)");

    m.def(
        "search",
        [](const py::object& data, std::size_t trials, std::size_t startup, std::uint64_t sampler_seed,
           std::uint64_t hpo_seed, const std::string& mode, const py::object& config, std::vector<double> split,
           std::optional<std::string> timestamp_column) {
            const auto s = series_from(data, timestamp_column);
            const auto cfg = train_config_from_json(from_py(config));
            TpeConfig tpe;
            tpe.n_trials = trials;
            tpe.n_startup = startup;
            tpe.seed = sampler_seed;
            const SearchSpace space{{}, shape_mode_from_string(mode), s.channels()};
            const auto r = search(s, split_from(split), cfg, tpe, space, kDefaultProbeZ, hpo_seed);
            auto j = best_json(r);
            nlohmann::json hist = nlohmann::json::array();
            for (const auto& t : r.history) hist.push_back(to_json(t));
            j["history"] = hist;
            j["warm_start"] = to_json(r.warm.shape);
            return to_py(j);
        },
        py::arg("data"), py::arg("trials") = 60, py::arg("startup") = 10, py::arg("sampler_seed") = 42,
        py::arg("hpo_seed") = 42, py::arg("mode") = "shared", py::arg("config") = py::none(),
        py::arg("split") = std::vector<double>{0.7, 0.1, 0.2}, py::arg("timestamp_column") = "date");

    m.def(
        "compare",
        [](const std::string& data, std::vector<std::string> normalizers, std::vector<std::uint64_t> seeds,
           std::vector<std::size_t> horizons, const std::string& shape_source, const py::object& config) {
            ExperimentConfig x;
            x.data = data;
            x.normalizers = std::move(normalizers);
            x.seeds = std::move(seeds);
            x.horizons = std::move(horizons);
            x.shape_source = shape_source_from_string(shape_source);
            x.train = train_config_from_json(from_py(config));
            x.validate();
            const auto s = load_series(data);
            return to_py(to_json(compare(x, s)));
        },
        py::arg("data"), py::arg("normalizers") = std::vector<std::string>{"none", "revin", "norin"},
        py::arg("seeds") = std::vector<std::uint64_t>{1, 2, 3}, py::arg("horizons") = std::vector<std::size_t>{24},
        py::arg("shape_source") = "warm-start", py::arg("config") = py::none());

    m.def(
        "wilcoxon",
        [](const Vec& a, const Vec& b) {
            const auto va = to_vec(a), vb = to_vec(b);
            const auto w = wilcoxon_signed_rank(va, vb);
            py::dict d;
            d["n_pairs"] = w.n_pairs;
            d["n_effective"] = w.n_effective;
            d["wins"] = w.wins;
            d["mean_delta"] = w.mean_delta;
            d["W"] = w.W;
            d["p"] = w.p;
            d["method"] = w.method == WilcoxonMethod::Exact ? "exact" : "normal-approximation";
            return d;
        },
        py::arg("a"), py::arg("b"), "paired two-sided Wilcoxon signed-rank test on a - b");
}
