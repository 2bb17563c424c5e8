#include "norin/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "norin/errors.hpp"

namespace norin {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Data sources

namespace {

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw DataError("invalid value for " + key + ": '" + v + "'");
    }
}

}  // namespace

SynthSpec default_benchmark() {
    SynthSpec s;
    s.seed = 7;
    s.L = 8000;
    s.C = 3;
    s.params.delta = 1.0;
    s.params.epsilon = -0.5;
    s.params.loc = 0.0;
    s.params.scale = 1.0;
    s.params.trend = 0.0005;
    s.params.season_amplitude = 0.5;
    s.params.season_period = 24.0;
    return s;
}

SynthSpec parse_synth_spec(const std::string& spec) {
    if (spec.rfind("synth:", 0) != 0) throw DataError("synthetic spec must start with 'synth:'");
    SynthSpec s = default_benchmark();
    for (const auto& kv : split_list(spec.substr(6), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DataError("synthetic spec entry without '=': " + kv);
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        const double v = to_double(key, value);
        if (key == "seed") s.seed = static_cast<std::uint64_t>(v);
        else if (key == "L") s.L = static_cast<std::size_t>(v);
        else if (key == "C") s.C = static_cast<std::size_t>(v);
        else if (key == "delta") s.params.delta = v;
        else if (key == "epsilon") s.params.epsilon = v;
        else if (key == "loc") s.params.loc = v;
        else if (key == "scale") s.params.scale = v;
        else if (key == "trend") s.params.trend = v;
        else if (key == "season") s.params.season_amplitude = v;
        else if (key == "period") s.params.season_period = v;
        else throw DataError("unknown synthetic spec key: " + key);
    }
    s.params.validate(s.C);
    return s;
}

MultiSeries load_series(const std::string& source, const std::optional<std::string>& timestamp_column) {
    if (source.rfind("synth:", 0) == 0) {
        const SynthSpec s = parse_synth_spec(source);
        return synth_heavy_tailed(s.seed, s.L, s.C, s.params);
    }
    return ingest_csv(source, timestamp_column);
}

// ---------------------------------------------------------------------------
// Configuration

ShapeSource shape_source_from_string(const std::string& s) {
    if (s == "warm-start" || s == "warm") return ShapeSource::WarmStart;
    if (s == "search") return ShapeSource::Search;
    if (s == "explicit") return ShapeSource::Explicit;
    throw DataError("unknown shape source: " + s);
}

const char* to_string(ShapeSource s) {
    switch (s) {
        case ShapeSource::WarmStart: return "warm-start";
        case ShapeSource::Search: return "search";
        case ShapeSource::Explicit: return "explicit";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (normalizers.empty()) throw DataError("at least one normalizer is required");
    if (seeds.empty()) throw DataError("at least one seed is required");
    if (horizons.empty()) throw DataError("at least one horizon is required");
    for (auto h : horizons)
        if (h == 0) throw DataError("horizons must be positive");
    split.validate();
    box.validate();
    train.validate();
}

ColumnSpec parse_column(const std::string& token, ShapeSource default_source) {
    if (token == "none" || token == "identity") return {token, {NormalizerKind::None, false}, std::nullopt};
    if (token == "revin") return {token, {NormalizerKind::RevIN, false}, std::nullopt};
    if (token == "revin-affine") return {token, {NormalizerKind::RevIN, true}, std::nullopt};
    if (token == "norin") return {token, {NormalizerKind::NoRIN, false}, default_source};
    if (token == "norin-warm") return {token, {NormalizerKind::NoRIN, false}, ShapeSource::WarmStart};
    if (token == "norin-search") return {token, {NormalizerKind::NoRIN, false}, ShapeSource::Search};
    if (token == "norin-explicit") return {token, {NormalizerKind::NoRIN, false}, ShapeSource::Explicit};
    throw DataError("unknown normalizer column: " + token);
}

ShapeParams resolve_shape(const ExperimentConfig& config, const MultiSeries& series, ShapeSource source,
                          std::size_t horizon) {
    const std::size_t C = series.channels();
    switch (source) {
        case ShapeSource::WarmStart:
            return warm_start(series, config.split, config.mode, config.z, config.box).shape;
        case ShapeSource::Search: {
            TrainConfig tc = config.train;
            tc.H = horizon;
            const SearchSpace space{config.box, config.mode, C};
            return search(series, config.split, tc, config.tpe, space, config.z, config.hpo_seed).best;
        }
        case ShapeSource::Explicit: {
            ShapeParams s = ShapeParams::shared_pair(C, config.explicit_delta, config.explicit_epsilon);
            s.shared = config.mode == ShapeMode::Shared;
            s.channels = series.channel_names;
            s.validate();
            return s;
        }
    }
    throw DataError("unknown shape source");
}

// ---------------------------------------------------------------------------
// Comparison

namespace {

std::pair<double, std::optional<double>> mean_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

ComparisonTable compare(const ExperimentConfig& config, const MultiSeries& series) {
    config.validate();
    ComparisonTable table;
    table.seeds = config.seeds;
    std::vector<ColumnSpec> columns;
    for (const auto& token : config.normalizers) {
        columns.push_back(parse_column(token, config.shape_source));
        table.columns.push_back(token);
    }

    std::optional<ShapeParams> warm;
    for (std::size_t H : config.horizons) {
        ComparisonRow row;
        row.dataset = config.label();
        row.horizon = H;
        std::map<ShapeSource, ShapeParams> shapes;
        for (const auto& col : columns) {
            ComparisonCell cell;
            try {
                ShapeParams shape;
                if (col.shape_source) {
                    const ShapeSource src = *col.shape_source;
                    if (!shapes.contains(src)) {
                        if (src == ShapeSource::WarmStart && warm) shapes[src] = *warm;
                        else shapes[src] = resolve_shape(config, series, src, H);
                        if (src == ShapeSource::WarmStart) warm = shapes[src];
                    }
                    shape = shapes[src];
                    cell.shape = shape;
                }
                for (auto seed : config.seeds) {
                    TrainConfig tc = config.train;
                    tc.H = H;
                    tc.seed = seed;
                    tc.joint_shape_training = false;
                    const RunResult run = train(series, config.split, col.normalizer, shape, tc);
                    cell.test_mse.push_back(run.test.mse);
                    cell.val_mse.push_back(run.val.mse);
                }
                std::tie(cell.mean, cell.std) = mean_std(cell.test_mse);
            } catch (const RunError& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            row.cells.push_back(std::move(cell));
        }
        for (std::size_t k = 0; k < row.cells.size(); ++k) {
            if (row.cells[k].failed) continue;
            if (!row.winner || row.cells[k].mean < row.cells[*row.winner].mean) row.winner = k;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

nlohmann::json to_json(const ComparisonTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : r.cells) {
            nlohmann::json cj{{"mean", c.mean},
                              {"test_mse", c.test_mse},
                              {"val_mse", c.val_mse},
                              {"failed", c.failed},
                              {"error", c.error}};
            cj["std"] = c.std ? nlohmann::json(*c.std) : nlohmann::json(nullptr);
            if (c.shape) cj["shape"] = to_json(*c.shape);
            cells.push_back(cj);
        }
        nlohmann::json rj{{"dataset", r.dataset}, {"horizon", r.horizon}, {"cells", cells}};
        rj["winner"] = r.winner ? nlohmann::json(*r.winner) : nlohmann::json(nullptr);
        rows.push_back(rj);
    }
    return {{"columns", t.columns}, {"seeds", t.seeds}, {"tie_rule", "column order"}, {"rows", rows}};
}

ComparisonTable comparison_from_json(const nlohmann::json& j) {
    ComparisonTable t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    t.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& rj : j.at("rows")) {
        ComparisonRow r;
        r.dataset = rj.at("dataset");
        r.horizon = rj.at("horizon");
        if (!rj.at("winner").is_null()) r.winner = rj.at("winner").get<std::size_t>();
        for (const auto& cj : rj.at("cells")) {
            ComparisonCell c;
            c.mean = cj.at("mean");
            if (!cj.at("std").is_null()) c.std = cj.at("std").get<double>();
            c.test_mse = cj.at("test_mse").get<std::vector<double>>();
            c.val_mse = cj.at("val_mse").get<std::vector<double>>();
            c.failed = cj.at("failed");
            c.error = cj.at("error");
            if (cj.contains("shape")) c.shape = shape_from_json(cj.at("shape"));
            r.cells.push_back(std::move(c));
        }
        if (r.cells.size() != t.columns.size()) throw DataError("comparison row width does not match columns");
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string comparison_csv(const ComparisonTable& t) {
    std::ostringstream out;
    out << "dataset,H";
    for (const auto& c : t.columns) out << ',' << c << "_mean," << c << "_std";
    out << ",winner\n";
    for (const auto& r : t.rows) {
        out << r.dataset << ',' << r.horizon;
        for (const auto& c : r.cells) {
            if (c.failed) out << ",failed,";
            else out << ',' << format_number(c.mean) << ',' << (c.std ? format_number(*c.std) : "");
        }
        out << ',' << (r.winner ? t.columns[*r.winner] : "") << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Wilcoxon

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("wilcoxon: paired samples differ in length");
    if (a.empty()) throw DataError("wilcoxon: empty input");

    WilcoxonResult res;
    res.n_pairs = a.size();
    std::vector<double> d;
    double delta_sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double di = a[i] - b[i];
        delta_sum += di;
        if (di > 0.0) ++res.wins;
        if (di != 0.0) d.push_back(di);
    }
    res.mean_delta = delta_sum / static_cast<double>(a.size());
    res.n_effective = d.size();
    const std::size_t n = d.size();
    if (n == 0) {
        res.p = 1.0;
        res.W = 0.0;
        res.method = WilcoxonMethod::Exact;
        return res;
    }

    // Doubled average ranks keep tied ranks integral.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return std::abs(d[x]) < std::abs(d[y]); });
    std::vector<std::uint64_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t s = 0; s < n;) {
        std::size_t e = s;
        while (e + 1 < n && std::abs(d[order[e + 1]]) == std::abs(d[order[s]])) ++e;
        const std::uint64_t r2 = (s + 1) + (e + 1);
        for (std::size_t k = s; k <= e; ++k) rank2[order[k]] = r2;
        const double t = static_cast<double>(e - s + 1);
        tie_term += t * t * t - t;
        s = e + 1;
    }
    std::uint64_t plus2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (d[i] > 0.0) plus2 += rank2[i];
    }
    const std::uint64_t minus2 = total2 - plus2;
    res.w_plus = static_cast<double>(plus2) / 2.0;
    res.w_minus = static_cast<double>(minus2) / 2.0;
    res.W = std::min(res.w_plus, res.w_minus);

    if (n <= kExactWilcoxonLimit) {
        res.method = WilcoxonMethod::Exact;
        // counts[s] = number of sign assignments whose doubled positive rank sum is s
        std::vector<double> counts(total2 + 1, 0.0);
        counts[0] = 1.0;
        std::uint64_t reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += rank2[i];
            for (std::uint64_t s = reach; s >= rank2[i]; --s) {
                counts[s] += counts[s - rank2[i]];
                if (s == rank2[i]) break;
            }
        }
        const std::uint64_t w2 = std::min(plus2, minus2);
        double tail = 0.0;
        for (std::uint64_t s = 0; s <= w2; ++s) tail += counts[s];
        res.p = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
    } else {
        res.method = WilcoxonMethod::NormalApprox;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        if (!(var > 0.0)) {
            res.p = 1.0;
        } else {
            const double z = std::max(0.0, (std::abs(res.w_plus - mean) - 0.5) / std::sqrt(var));
            res.p = std::clamp(std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
        }
    }
    return res;
}

SignificanceReport significance(const ComparisonTable& table, const std::string& reference) {
    const auto ref_it = std::find(table.columns.begin(), table.columns.end(), reference);
    if (ref_it == table.columns.end()) throw DataError("reference column not in table: " + reference);
    const auto ref = static_cast<std::size_t>(ref_it - table.columns.begin());
    SignificanceReport report;
    report.reference = reference;
    for (std::size_t k = 0; k < table.columns.size(); ++k) {
        if (k == ref) continue;
        std::vector<double> a, b;
        for (const auto& row : table.rows) {
            if (row.cells[k].failed || row.cells[ref].failed) continue;
            a.push_back(row.cells[k].mean);
            b.push_back(row.cells[ref].mean);
        }
        if (a.empty()) continue;
        report.entries.push_back({table.columns[k], wilcoxon_signed_rank(a, b)});
    }
    return report;
}

nlohmann::json to_json(const SignificanceReport& r) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        const auto& w = e.result;
        entries.push_back({{"baseline", e.baseline},
                           {"n_pairs", w.n_pairs},
                           {"n_effective", w.n_effective},
                           {"wins", w.wins},
                           {"mean_delta", w.mean_delta},
                           {"w_plus", w.w_plus},
                           {"w_minus", w.w_minus},
                           {"W", w.W},
                           {"p", w.p},
                           {"method", w.method == WilcoxonMethod::Exact ? "exact" : "normal-approximation"}});
    }
    return {{"reference", r.reference}, {"entries", entries}};
}

SignificanceReport significance_from_json(const nlohmann::json& j) {
    SignificanceReport r;
    r.reference = j.at("reference");
    for (const auto& ej : j.at("entries")) {
        SignificanceEntry e;
        e.baseline = ej.at("baseline");
        auto& w = e.result;
        w.n_pairs = ej.at("n_pairs");
        w.n_effective = ej.at("n_effective");
        w.wins = ej.at("wins");
        w.mean_delta = ej.at("mean_delta");
        w.w_plus = ej.at("w_plus");
        w.w_minus = ej.at("w_minus");
        w.W = ej.at("W");
        w.p = ej.at("p");
        w.method = ej.at("method") == "exact" ? WilcoxonMethod::Exact : WilcoxonMethod::NormalApprox;
        r.entries.push_back(e);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Grid sweep

std::vector<double> RangeSpec::values() const {
    if (!(step > 0.0)) throw DataError("range step must be positive");
    if (hi < lo) throw DataError("range upper bound below lower bound");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = std::round((lo + static_cast<double>(i) * step) * 1e10) / 1e10;
    return out;
}

RangeSpec parse_range(const std::string& text) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ':')) parts.push_back(item);
    if (parts.size() != 2 && parts.size() != 3) throw DataError("range must be lo:hi or lo:hi:step, got " + text);
    RangeSpec r;
    r.lo = to_double("range", parts[0]);
    r.hi = to_double("range", parts[1]);
    r.step = parts.size() == 3 ? to_double("range", parts[2]) : 0.0;
    if (parts.size() == 3) (void)r.values();
    else if (!(r.lo < r.hi)) throw DataError("range must satisfy lo < hi: " + text);
    return r;
}

GridResult grid_sweep(const ExperimentConfig& config, const MultiSeries& series, const RangeSpec& delta,
                      const RangeSpec& epsilon) {
    config.validate();
    GridResult g;
    g.deltas = delta.values();
    g.epsilons = epsilon.values();
    for (double d : g.deltas)
        if (!(d > 0.0)) throw DataError("grid delta values must be positive");
    g.seed = config.train.seed;
    g.horizon = config.horizons.front();
    g.test_mse = Matrix(g.deltas.size(), g.epsilons.size());

    TrainConfig tc = config.train;
    tc.H = g.horizon;
    tc.joint_shape_training = false;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < g.deltas.size(); ++r)
        for (std::size_t c = 0; c < g.epsilons.size(); ++c) {
            const ShapeParams shape = ShapeParams::shared_pair(series.channels(), g.deltas[r], g.epsilons[c]);
            double value = std::numeric_limits<double>::quiet_NaN();
            try {
                value = train(series, config.split, {NormalizerKind::NoRIN, false}, shape, tc).test.mse;
            } catch (const RunError&) {
            }
            g.test_mse(r, c) = value;
            if (value < best) {
                best = value;
                g.argmin_row = r;
                g.argmin_col = c;
            }
        }
    return g;
}

nlohmann::json to_json(const GridResult& g) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t r = 0; r < g.test_mse.rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t c = 0; c < g.test_mse.cols; ++c) {
            const double v = g.test_mse(r, c);
            row.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
        }
        cells.push_back(row);
    }
    return {{"deltas", g.deltas},
            {"epsilons", g.epsilons},
            {"test_mse", cells},
            {"argmin", {{"row", g.argmin_row}, {"col", g.argmin_col}}},
            {"seed", g.seed},
            {"horizon", g.horizon}};
}

GridResult grid_from_json(const nlohmann::json& j) {
    GridResult g;
    g.deltas = j.at("deltas").get<std::vector<double>>();
    g.epsilons = j.at("epsilons").get<std::vector<double>>();
    g.test_mse = Matrix(g.deltas.size(), g.epsilons.size());
    const auto& cells = j.at("test_mse");
    if (cells.size() != g.deltas.size()) throw DataError("grid rows do not match deltas");
    for (std::size_t r = 0; r < g.deltas.size(); ++r) {
        if (cells[r].size() != g.epsilons.size()) throw DataError("grid columns do not match epsilons");
        for (std::size_t c = 0; c < g.epsilons.size(); ++c)
            g.test_mse(r, c) = cells[r][c].is_null() ? std::numeric_limits<double>::quiet_NaN() : cells[r][c].get<double>();
    }
    g.argmin_row = j.at("argmin").at("row");
    g.argmin_col = j.at("argmin").at("col");
    g.seed = j.at("seed");
    g.horizon = j.at("horizon");
    return g;
}

std::string grid_csv(const GridResult& g) {
    std::ostringstream out;
    out << "delta\\epsilon";
    for (double e : g.epsilons) out << ',' << format_number(e);
    out << '\n';
    for (std::size_t r = 0; r < g.deltas.size(); ++r) {
        out << format_number(g.deltas[r]);
        for (std::size_t c = 0; c < g.epsilons.size(); ++c) {
            out << ',' << format_number(g.test_mse(r, c));
            if (r == g.argmin_row && c == g.argmin_col) out << '*';
        }
        out << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Degeneration

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

DegenerationSummary summarize_trajectory(const RunResult& run) {
    DegenerationSummary s;
    s.seed = run.seed;
    s.initial_delta = mean_of(run.initial_shape.delta);
    s.initial_epsilon = mean_of(run.initial_shape.epsilon);
    s.final_delta = s.initial_delta;
    s.final_epsilon = s.initial_epsilon;
    double prev = s.initial_delta;
    for (const auto& snap : run.shape_trajectory) {
        const double d = mean_of(snap.delta);
        if (!s.first_increase_epoch && d > prev) s.first_increase_epoch = snap.epoch;
        s.clamped = s.clamped || snap.clamped;
        prev = d;
        s.final_delta = d;
        s.final_epsilon = mean_of(snap.epsilon);
    }
    s.drift_sign = s.final_delta > s.initial_delta ? 1 : (s.final_delta < s.initial_delta ? -1 : 0);
    return s;
}

DegenerationResult degeneration_run(const ExperimentConfig& config, const MultiSeries& series,
                                    const ShapeParams& start) {
    config.validate();
    DegenerationResult out;
    for (auto seed : config.seeds) {
        TrainConfig tc = config.train;
        tc.H = config.horizons.front();
        tc.seed = seed;
        tc.joint_shape_training = true;
        RunResult run = train(series, config.split, {NormalizerKind::NoRIN, false}, start, tc);
        out.summaries.push_back(summarize_trajectory(run));
        if (out.summaries.back().drift_sign > 0) ++out.increased;
        out.runs.push_back(std::move(run));
    }
    return out;
}

nlohmann::json to_json(const DegenerationResult& r) {
    nlohmann::json sums = nlohmann::json::array();
    for (const auto& s : r.summaries) {
        nlohmann::json j{{"seed", s.seed},
                         {"initial_delta", s.initial_delta},
                         {"final_delta", s.final_delta},
                         {"initial_epsilon", s.initial_epsilon},
                         {"final_epsilon", s.final_epsilon},
                         {"drift_sign", s.drift_sign},
                         {"clamped", s.clamped}};
        j["first_increase_epoch"] =
            s.first_increase_epoch ? nlohmann::json(*s.first_increase_epoch) : nlohmann::json(nullptr);
        sums.push_back(j);
    }
    return {{"summaries", sums}, {"increased", r.increased}, {"seeds", r.summaries.size()}};
}

std::string trajectory_jsonl(const DegenerationResult& r) {
    std::string out;
    for (const auto& run : r.runs) {
        out += nlohmann::json{{"seed", run.seed},
                              {"epoch", 0},
                              {"delta", run.initial_shape.delta},
                              {"epsilon", run.initial_shape.epsilon},
                              {"clamped", false}}
                   .dump() +
               "\n";
        for (std::size_t k = 0; k < run.shape_trajectory.size(); ++k) {
            const auto& s = run.shape_trajectory[k];
            out += nlohmann::json{{"seed", run.seed},
                                  {"epoch", s.epoch},
                                  {"delta", s.delta},
                                  {"epsilon", s.epsilon},
                                  {"clamped", s.clamped},
                                  {"val_mse", run.val_trace[k]}}
                       .dump() +
                   "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "lr") return SweepAxis::Lr;
    if (s == "batch") return SweepAxis::Batch;
    if (s == "epochs") return SweepAxis::Epochs;
    if (s == "T") return SweepAxis::T;
    if (s == "seed") return SweepAxis::Seed;
    throw DataError("unknown sweep axis: " + s);
}

const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Lr: return "lr";
        case SweepAxis::Batch: return "batch";
        case SweepAxis::Epochs: return "epochs";
        case SweepAxis::T: return "T";
        case SweepAxis::Seed: return "seed";
    }
    return "?";
}

SweepTable sensitivity_sweep(const ExperimentConfig& config, const MultiSeries& series, const ShapeParams& shape,
                             SweepAxis axis, std::span<const double> values) {
    config.validate();
    if (values.empty()) throw DataError("sweep needs at least one value");
    SweepTable table;
    table.axis = axis;
    for (double v : values) {
        TrainConfig tc = config.train;
        tc.H = config.horizons.front();
        tc.joint_shape_training = false;
        auto positive_count = [&](const char* name) {
            if (!(v >= 1.0) || v != std::floor(v)) throw DataError(std::string(name) + " values must be positive integers");
            return static_cast<std::size_t>(v);
        };
        switch (axis) {
            case SweepAxis::Lr: tc.lr = v; break;
            case SweepAxis::Batch: tc.batch_size = positive_count("batch"); break;
            case SweepAxis::Epochs:
                if (!(v >= 0.0) || v != std::floor(v)) throw DataError("epochs values must be non-negative integers");
                tc.epochs = static_cast<std::size_t>(v);
                break;
            case SweepAxis::T: tc.T = positive_count("T"); break;
            case SweepAxis::Seed:
                if (!(v >= 0.0) || v != std::floor(v)) throw DataError("seed values must be non-negative integers");
                tc.seed = static_cast<std::uint64_t>(v);
                break;
        }
        const RunResult run = train(series, config.split, {NormalizerKind::NoRIN, false}, shape, tc);
        table.rows.push_back({v, run.test.mse, run.val.mse});
    }
    if (axis == SweepAxis::Seed) {
        std::vector<double> mses;
        for (const auto& r : table.rows) mses.push_back(r.test_mse);
        const auto [m, s] = mean_std(mses);
        table.mean = m;
        table.std = s.value_or(0.0);
        table.cv = *table.std / m;
    }
    return table;
}

nlohmann::json to_json(const SweepTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back({{"value", r.value}, {"test_mse", r.test_mse}, {"val_mse", r.val_mse}});
    nlohmann::json j{{"axis", to_string(t.axis)}, {"rows", rows}};
    if (t.mean) j["mean"] = *t.mean;
    if (t.std) j["std"] = *t.std;
    if (t.cv) j["cv"] = *t.cv;
    return j;
}

SweepTable sweep_from_json(const nlohmann::json& j) {
    SweepTable t;
    t.axis = sweep_axis_from_string(j.at("axis"));
    for (const auto& r : j.at("rows")) t.rows.push_back({r.at("value"), r.at("test_mse"), r.at("val_mse")});
    if (j.contains("mean")) t.mean = j.at("mean").get<double>();
    if (j.contains("std")) t.std = j.at("std").get<double>();
    if (j.contains("cv")) t.cv = j.at("cv").get<double>();
    return t;
}

std::string sweep_csv(const SweepTable& t) {
    std::ostringstream out;
    out << to_string(t.axis) << ",test_mse,val_mse\n";
    for (const auto& r : t.rows)
        out << format_number(r.value) << ',' << format_number(r.test_mse) << ',' << format_number(r.val_mse) << '\n';
    if (t.mean) {
        out << "mean," << format_number(*t.mean) << ",\n";
        out << "std," << format_number(*t.std) << ",\n";
        out << "cv," << format_number(*t.cv) << ",\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Artifacts

void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + path);
        out << content;
        if (!out) throw DataError("failed writing " + path);
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json tag(nlohmann::json doc, const std::string& kind) {
    doc["kind"] = kind;
    return doc;
}

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string render_csv(const Table& t) {
    std::string out;
    for (const auto& row : t) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            out += row[k];
        }
        out += '\n';
    }
    return out;
}

std::string render_text(const std::string& title, const Table& t) {
    std::vector<std::size_t> width;
    for (const auto& row : t)
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (width.size() <= k) width.push_back(0);
            width[k] = std::max(width[k], row[k].size());
        }
    std::string out = "## " + title + "\n\n";
    auto line = [&](const std::vector<std::string>& row) {
        out += '|';
        for (std::size_t k = 0; k < width.size(); ++k) {
            const std::string cell = k < row.size() ? row[k] : "";
            out += ' ' + cell + std::string(width[k] - cell.size(), ' ') + " |";
        }
        out += '\n';
    };
    for (std::size_t r = 0; r < t.size(); ++r) {
        line(t[r]);
        if (r == 0) {
            out += '|';
            for (auto w : width) out += std::string(w + 2, '-') + '|';
            out += '\n';
        }
    }
    return out;
}

Table comparison_table(const ComparisonTable& t) {
    Table out;
    std::vector<std::string> head{"dataset", "H"};
    for (const auto& c : t.columns) head.push_back(c);
    out.push_back(head);
    for (const auto& r : t.rows) {
        std::vector<std::string> row{r.dataset, std::to_string(r.horizon)};
        for (std::size_t k = 0; k < r.cells.size(); ++k) {
            const auto& c = r.cells[k];
            std::string cell = c.failed ? "failed" : format_number(c.mean);
            if (!c.failed && c.std) cell += " ± " + format_number(*c.std);
            if (r.winner && *r.winner == k) cell = "**" + cell + "**";
            row.push_back(cell);
        }
        out.push_back(row);
    }
    return out;
}

Table significance_table(const SignificanceReport& s) {
    Table out{{"baseline", "reference", "wins", "pairs", "mean_delta", "W", "p", "method"}};
    for (const auto& e : s.entries) {
        const auto& w = e.result;
        out.push_back({e.baseline, s.reference, std::to_string(w.wins), std::to_string(w.n_pairs),
                       format_number(w.mean_delta), format_number(w.W), format_number(w.p),
                       w.method == WilcoxonMethod::Exact ? "exact" : "normal-approximation"});
    }
    return out;
}

Table grid_table(const GridResult& g) {
    Table out;
    std::vector<std::string> head{"delta\\epsilon"};
    for (double e : g.epsilons) head.push_back(format_number(e));
    out.push_back(head);
    for (std::size_t r = 0; r < g.deltas.size(); ++r) {
        std::vector<std::string> row{format_number(g.deltas[r])};
        for (std::size_t c = 0; c < g.epsilons.size(); ++c) {
            std::string cell = format_number(g.test_mse(r, c));
            if (r == g.argmin_row && c == g.argmin_col) cell += "*";
            row.push_back(cell);
        }
        out.push_back(row);
    }
    return out;
}

Table sweep_table(const SweepTable& t) {
    Table out{{to_string(t.axis), "test_mse", "val_mse"}};
    for (const auto& r : t.rows) out.push_back({format_number(r.value), format_number(r.test_mse), format_number(r.val_mse)});
    if (t.mean) {
        out.push_back({"mean", format_number(*t.mean), ""});
        out.push_back({"std", format_number(*t.std), ""});
        out.push_back({"cv", format_number(*t.cv), ""});
    }
    return out;
}

Table degeneration_table(const nlohmann::json& j) {
    Table out{{"seed", "initial_delta", "final_delta", "drift", "first_increase_epoch", "clamped"}};
    for (const auto& s : j.at("summaries")) {
        const int sign = s.at("drift_sign");
        out.push_back({std::to_string(s.at("seed").get<std::uint64_t>()), format_number(s.at("initial_delta")),
                       format_number(s.at("final_delta")), sign > 0 ? "up" : (sign < 0 ? "down" : "flat"),
                       s.at("first_increase_epoch").is_null()
                           ? "-"
                           : std::to_string(s.at("first_increase_epoch").get<std::size_t>()),
                       s.at("clamped").get<bool>() ? "yes" : "no"});
    }
    return out;
}

Table run_table(const nlohmann::json& j) {
    Table out{{"split", "mse", "mae"}};
    for (const char* split : {"train", "val", "test"})
        out.push_back({split, format_number(j.at(split).at("mse")), format_number(j.at(split).at("mae"))});
    return out;
}

Table trials_table(const std::string& text, const std::string& name) {
    Table out{{"index", "status", "objective", "best_so_far", "delta", "epsilon"}};
    std::istringstream in(text);
    std::string line;
    double best = std::numeric_limits<double>::infinity();
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json t;
        try {
            t = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw DataError(name + ": corrupt trial record on line " + std::to_string(lineno));
        }
        const bool ok = t.at("status") == "complete";
        const double obj = t.at("objective");
        if (ok) best = std::min(best, obj);
        const auto& cand = t.at("candidate");
        auto join = [](const nlohmann::json& arr) {
            std::string s;
            for (std::size_t k = 0; k < arr.size(); ++k) s += (k ? " " : "") + format_number(arr[k].get<double>());
            return s;
        };
        out.push_back({std::to_string(t.at("index").get<std::size_t>()), ok ? "complete" : "failed",
                       ok ? format_number(obj) : "-", format_number(best), join(cand.at("delta")),
                       join(cand.at("epsilon"))});
    }
    return out;
}

Table trajectory_table(const std::string& text, const std::string& name) {
    Table out{{"seed", "epoch", "delta", "epsilon", "clamped"}};
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json t;
        try {
            t = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw DataError(name + ": corrupt trajectory record on line " + std::to_string(lineno));
        }
        const auto& d = t.at("delta");
        const auto& e = t.at("epsilon");
        double dm = 0.0, em = 0.0;
        for (const auto& v : d) dm += v.get<double>();
        for (const auto& v : e) em += v.get<double>();
        out.push_back({std::to_string(t.at("seed").get<std::uint64_t>()),
                       std::to_string(t.at("epoch").get<std::size_t>()),
                       format_number(dm / static_cast<double>(d.size())),
                       format_number(em / static_cast<double>(e.size())), t.at("clamped").get<bool>() ? "yes" : "no"});
    }
    return out;
}

}  // namespace

std::vector<RenderedFile> render_reports(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("artifact directory does not exist: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<RenderedFile> out;
    for (const auto& path : files) {
        const std::string name = path.filename().string();
        const std::string stem = path.stem().string();
        const std::string ext = path.extension().string();
        Table table;
        std::string title;
        try {
            if (ext == ".jsonl") {
                const std::string text = read_file(path.string());
                const std::string first = text.substr(0, text.find('\n'));
                if (first.find("\"candidate\"") != std::string::npos) {
                    table = trials_table(text, name);
                    title = "trial history: " + stem;
                } else if (first.find("\"epoch\"") != std::string::npos) {
                    table = trajectory_table(text, name);
                    title = "shape trajectory: " + stem;
                } else {
                    continue;
                }
            } else if (ext == ".json") {
                const auto j = nlohmann::json::parse(read_file(path.string()));
                if (!j.is_object() || !j.contains("kind")) continue;
                const std::string kind = j.at("kind");
                if (kind == "comparison") table = comparison_table(comparison_from_json(j));
                else if (kind == "significance") table = significance_table(significance_from_json(j));
                else if (kind == "grid") table = grid_table(grid_from_json(j));
                else if (kind == "sweep") table = sweep_table(sweep_from_json(j));
                else if (kind == "degeneration") table = degeneration_table(j);
                else if (kind == "run") table = run_table(j);
                else continue;
                title = kind + ": " + stem;
            } else {
                continue;
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corrupt artifact " + name + ": " + e.what());
        }
        out.push_back({stem + "_report.csv", render_csv(table)});
        out.push_back({stem + "_report.md", render_text(title, table)});
    }
    if (out.empty())
        throw DataError("no artifacts found in " + dir +
                        "; expected *.json documents of kind comparison, significance, grid, sweep, degeneration or "
                        "run, or *.jsonl trial histories");
    return out;
}

std::vector<std::string> report(const std::string& dir, const std::string& out_dir) {
    const auto rendered = render_reports(dir);
    std::vector<std::string> names;
    for (const auto& f : rendered) {
        write_file_atomic((fs::path(out_dir) / f.name).string(), f.content);
        names.push_back(f.name);
    }
    return names;
}

}  // namespace norin
