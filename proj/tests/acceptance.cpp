// Acceptance criteria runner. Prints one PASS/FAIL line per criterion with
// the measured quantities; exit status is nonzero when any selected
// criterion fails. `--only N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "norin/backbone.hpp"
#include "norin/harness.hpp"
#include "norin/normalizers.hpp"
#include "norin/rng.hpp"
#include "norin/series.hpp"
#include "norin/shape_fit.hpp"
#include "norin/shape_search.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace norin;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string cli_path;
fs::path work_dir;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// 1. round trip
Outcome round_trip() {
    Rng rng(20240101);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double d = rng.uniform(0.8, 5.0), e = rng.uniform(-1.0, 1.0);
        const double xi = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double lam = rng.uniform(-100.0, 100.0);
        // standardized offsets from 1e-6 to 1e4 in magnitude, both signs
        const double u = (rng.uniform() < 0.5 ? -1.0 : 1.0) * std::pow(10.0, rng.uniform(-6.0, 4.0));
        const double x = lam + xi * u;
        const double back = jsu_inverse_scalar(jsu_forward_scalar(x, d, e, lam, xi), d, e, lam, xi);
        // relative to the magnitude of the operands; x alone cancels when x ~ -lam
        worst = std::max(worst, std::abs(back - x) / std::max({std::abs(x), std::abs(lam), 1e-300}));
    }
    return {worst <= 1e-9, "max rel err " + fmt(worst) + " over 1e4 draws (bound 1e-9)"};
}

// 2. near-linear limit
Outcome near_linear() {
    Rng rng(99);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double d = rng.uniform(0.8, 5.0), e = rng.uniform(-1.0, 1.0);
        const double xi = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double lam = rng.uniform(-10.0, 10.0);
        const double u = rng.uniform(-1e-3, 1e-3);
        if (u == 0.0) continue;
        const double x = lam + xi * u;
        const double ul = (x - lam) / xi;
        const double z = jsu_forward_scalar(x, d, e, lam, xi);
        const double affine = d * ul;
        worst = std::max(worst, std::abs((z - e) - affine) / std::abs(affine));
    }
    // the cubic term of asinh sets the deviation: |asinh(u) - u| / |u| -> u^2 / 6
    const double predicted = 1e-6 / 6.0;
    return {worst <= 1e-8, "max deviation/|affine| " + fmt(worst) + " at |u|<=1e-3 (bound 1e-8; asinh series gives " +
                               fmt(predicted) + ")"};
}

// 3. gradient suite
WindowBatch random_batch(Rng& rng, std::size_t N, std::size_t T, std::size_t H, std::size_t C) {
    WindowBatch b{Array3(N, T, C), Array3(N, H, C), T, H};
    for (double& v : b.lookbacks.data) v = rng.uniform(-2, 2) + std::sinh(rng.normal());
    for (double& v : b.horizons.data) v = rng.uniform(-2, 2) + std::sinh(rng.normal());
    return b;
}

Outcome gradients() {
    Rng rng(31337);
    std::size_t checks = 0, bad = 0;
    double worst = 0.0;
    auto record = [&](double analytic, double fd) {
        const double r = oracle::rel_err(analytic, fd, 1e-4);
        worst = std::max(worst, r);
        if (r > 1e-4) ++bad;
        ++checks;
    };

    // elementwise transform partials
    for (int k = 0; k < 1000; ++k) {
        const std::size_t C = 1 + rng.below(3);
        Array3 x(1, 1, C);
        InstanceStats st;
        st.loc = Matrix(1, C);
        st.scale = Matrix(1, C);
        st.degenerate.assign(C, 0);
        ShapeParams sh;
        sh.shared = false;
        for (std::size_t c = 0; c < C; ++c) {
            st.loc(0, c) = rng.uniform(-3, 3);
            st.scale(0, c) = std::exp(rng.uniform(-2, 2));
            x(0, 0, c) = st.loc(0, c) + st.scale(0, c) * rng.uniform(-4, 4);
            sh.delta.push_back(rng.uniform(0.8, 5.0));
            sh.epsilon.push_back(rng.uniform(-1, 1));
        }
        const auto fg = jsu_forward_grads(x, st, sh);
        const Array3 z = jsu_forward(x, st, sh);
        const auto ig = jsu_inverse_grads(z, st, sh);
        for (std::size_t c = 0; c < C; ++c) {
            const double lam = st.loc(0, c), xi = st.scale(0, c);
            const double d = sh.delta[c], e = sh.epsilon[c], xv = x(0, 0, c), zv = z(0, 0, c);
            auto h = [](double p) { return 1e-6 * std::max(1.0, std::abs(p)); };
            record(fg.d_delta(0, 0, c), oracle::central_diff([&](double v) { return jsu_forward_scalar(xv, v, e, lam, xi); }, d, h(d)));
            record(fg.d_epsilon(0, 0, c), oracle::central_diff([&](double v) { return jsu_forward_scalar(xv, d, v, lam, xi); }, e, h(e)));
            record(fg.d_x(0, 0, c), oracle::central_diff([&](double v) { return jsu_forward_scalar(v, d, e, lam, xi); }, xv, h(xv)));
            record(ig.d_delta(0, 0, c), oracle::central_diff([&](double v) { return jsu_inverse_scalar(zv, v, e, lam, xi); }, d, h(d)));
            record(ig.d_epsilon(0, 0, c), oracle::central_diff([&](double v) { return jsu_inverse_scalar(zv, d, v, lam, xi); }, e, h(e)));
            record(ig.d_z(0, 0, c), oracle::central_diff([&](double v) { return jsu_inverse_scalar(v, d, e, lam, xi); }, zv, h(zv)));
        }
    }
    const std::size_t transform_checks = checks;

    struct Variant {
        NormalizerKind kind;
        bool affine;
        bool joint;
    };
    const Variant variants[] = {{NormalizerKind::None, false, false},  {NormalizerKind::RevIN, false, false},
                                {NormalizerKind::RevIN, true, false},  {NormalizerKind::NoRIN, false, false},
                                {NormalizerKind::NoRIN, false, true}};
    std::size_t instances = 0;
    for (int trial = 0; trial < 220; ++trial)
        for (const auto& v : variants) {
            const std::size_t N = 1 + rng.below(4), T = 2 + rng.below(7), H = 1 + rng.below(4), C = 1 + rng.below(3);
            const auto b = random_batch(rng, N, T, H, C);
            Model m;
            m.kind = v.kind;
            m.backbone = init_backbone(T, H, C, rng.next_u64(), rng.uniform() < 0.5);
            for (double& bb : m.backbone.b) bb = rng.uniform(-0.5, 0.5);
            m.shape.shared = false;
            for (std::size_t c = 0; c < C; ++c) {
                m.shape.delta.push_back(rng.uniform(0.8, 3.0));
                m.shape.epsilon.push_back(rng.uniform(-1, 1));
            }
            m.post = AffinePost::identity(C, v.affine);
            if (v.affine)
                for (std::size_t c = 0; c < C; ++c) {
                    m.post.gamma[c] = rng.uniform(0.5, 1.5);
                    m.post.beta[c] = rng.uniform(-0.5, 0.5);
                }
            const auto st = stats_for(v.kind, b.lookbacks);
            const auto g = loss_and_grads(m, b, st, {}, v.joint);
            auto check = [&](double& slot, double analytic) {
                const double keep = slot, h = 1e-6 * std::max(1.0, std::abs(slot));
                slot = keep + h;
                const double up = loss_and_grads(m, b, st, {}, false).loss;
                slot = keep - h;
                const double down = loss_and_grads(m, b, st, {}, false).loss;
                slot = keep;
                record(analytic, (up - down) / (2 * h));
            };
            for (std::size_t k = 0; k < m.backbone.W.size(); ++k) check(m.backbone.W[k], g.dW[k]);
            for (std::size_t k = 0; k < m.backbone.b.size(); ++k) check(m.backbone.b[k], g.db[k]);
            if (v.affine)
                for (std::size_t c = 0; c < C; ++c) {
                    check(m.post.gamma[c], g.d_gamma[c]);
                    check(m.post.beta[c], g.d_beta[c]);
                }
            if (v.joint) {
                if (g.d_delta.size() != C || g.d_epsilon.size() != C) ++bad;
                for (std::size_t c = 0; c < C && c < g.d_delta.size(); ++c) {
                    check(m.shape.delta[c], g.d_delta[c]);
                    check(m.shape.epsilon[c], g.d_epsilon[c]);
                }
            }
            ++instances;
        }
    const bool ok = bad == 0 && transform_checks >= 1000 && instances >= 1000;
    return {ok, std::to_string(checks) + " partials (" + std::to_string(transform_checks) + " transform, " +
                    std::to_string(instances) + " end-to-end instances), " + std::to_string(bad) +
                    " outside 1e-4, worst rel " + fmt(worst)};
}

// 4. fit recovery
Outcome fit_recovery() {
    Rng rng(2024);
    std::vector<double> x(100000);
    for (double& v : x) v = std::sinh((rng.normal() + 0.5) / 2.0);
    const auto f = slifker_shapiro_fit(x);
    std::vector<double> u(100000);
    for (double& v : u) v = rng.uniform();
    const auto g = slifker_shapiro_fit(u);
    const bool ok = f.family == JohnsonFamily::SU && std::abs(f.delta - 2.0) <= 0.2 &&
                    std::abs(f.epsilon + 0.5) <= 0.1 && g.family == JohnsonFamily::SB;
    return {ok, std::string("JSU(2,-0.5): family ") + to_string(f.family) + ", delta " + fmt(f.delta) + ", epsilon " +
                    fmt(f.epsilon) + "; uniform: family " + to_string(g.family) + " (ratio " + fmt(g.ratio) + ")"};
}

// 5. affine invariance and gaussianization
Outcome affine_invariance() {
    Rng rng(5150);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        std::vector<double> x(50 + rng.below(2000));
        const double d = rng.uniform(0.8, 3), e = rng.uniform(-1, 1);
        for (double& v : x) v = std::sinh((rng.normal() - e) / d);
        const double a = std::pow(10.0, rng.uniform(-2, 2)), b = rng.uniform(-100, 100);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto mx = moments(x), my = moments(y);
        worst = std::max({worst, oracle::rel_err(*mx.skewness, *my.skewness, 1e-3),
                          oracle::rel_err(*mx.kurtosis, *my.kurtosis, 1e-3)});
    }
    const double d = 1.7, e = 0.6, lam = 2.0, xi = 3.0;
    std::vector<double> s(100000);
    for (double& v : s) v = jsu_inverse_scalar(rng.normal(), d, e, lam, xi);
    const auto raw = moments(s);
    for (double& v : s) v = jsu_forward_scalar(v, d, e, lam, xi);
    const auto m = moments(s);
    const bool ok = worst <= 1e-10 && std::abs(*m.skewness) <= 0.05 && std::abs(*m.kurtosis - 3.0) <= 0.1;
    return {ok, "max rel change of skew/kurt " + fmt(worst) + "; JSU sample skew " + fmt(*raw.skewness) + " kurt " +
                    fmt(*raw.kurtosis) + " -> skew " + fmt(*m.skewness) + " kurt " + fmt(*m.kurtosis)};
}

// 6. wilcoxon
Outcome wilcoxon() {
    Rng rng(777);
    std::size_t mismatches = 0, cases = 0;
    for (int k = 0; k < 400; ++k) {
        const std::size_t n = 1 + rng.below(12);
        std::vector<double> a(n), b(n, 0.0), d(n);
        for (std::size_t i = 0; i < n; ++i) {
            // small integer magnitudes so ties are common; never zero
            double v = static_cast<double>(1 + rng.below(6));
            if (k % 2) v += 0.25 * static_cast<double>(rng.below(4));
            a[i] = rng.uniform() < 0.5 ? -v : v;
            d[i] = a[i];
        }
        const auto r = wilcoxon_signed_rank(a, b);
        if (r.method != WilcoxonMethod::Exact || r.p != oracle::wilcoxon_bruteforce(d)) ++mismatches;
        const auto back = wilcoxon_signed_rank(b, a);
        if (back.p != r.p) ++mismatches;
        ++cases;
    }
    const std::vector<double> d5{1, 2, 3, 4, 5}, z5(5, 0.0);
    const auto r5 = wilcoxon_signed_rank(d5, z5);
    const bool ok = mismatches == 0 && r5.p == 0.0625 && r5.W == 0.0;
    return {ok, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches vs enumeration; d=[1..5] p=" +
                    fmt(r5.p) + " W=" + fmt(r5.W)};
}

// 7. TPE sanity
Outcome tpe_sanity() {
    auto quadratic = [](const ShapeParams& s, std::size_t) {
        return std::pow(s.delta[0] - 2.0, 2) + std::pow(s.epsilon[0] + 0.3, 2);
    };
    const SearchSpace space{{}, ShapeMode::Shared, 1};
    const auto warm = ShapeParams::shared_pair(1, 1.0, 0.0);
    std::vector<double> dist, tpe_best, rand_best;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TpeConfig cfg;
        cfg.n_trials = 60;
        cfg.seed = seed;
        const auto r = search(quadratic, space, cfg, warm);
        dist.push_back(std::hypot(r.best.delta[0] - 2.0, r.best.epsilon[0] + 0.3));
        tpe_best.push_back(r.best_objective);
        Rng rng(mix_seed(seed, 0xabc));
        double best = INFINITY;
        for (int k = 0; k < 60; ++k)
            best = std::min(best, quadratic(ShapeParams::shared_pair(1, rng.uniform(0.8, 5.0), rng.uniform(-1, 1)), 0));
        rand_best.push_back(best);
    }
    const double md = median_of(dist), mt = median_of(tpe_best), mr = median_of(rand_best);
    return {md <= 0.15 && mt <= mr, "median distance " + fmt(md) + " (bound 0.15); median best " + fmt(mt) +
                                        " vs uniform-random " + fmt(mr)};
}

ExperimentConfig benchmark_config() {
    ExperimentConfig x;
    x.data = "synth:";
    x.horizons = {24};
    x.train.T = 96;
    x.train.H = 24;
    x.seeds = {1, 2, 3, 4, 5};
    return x;
}

MultiSeries benchmark_series() {
    const auto b = default_benchmark();
    return synth_heavy_tailed(b.seed, b.L, b.C, b.params);
}

// 8. desk-scale end to end
Outcome end_to_end() {
    auto x = benchmark_config();
    x.normalizers = {"revin", "norin-warm", "norin-search"};
    const auto series = benchmark_series();
    const auto t = compare(x, series);
    const auto& row = t.rows.at(0);
    for (const auto& c : row.cells)
        if (c.failed) return {false, "a cell failed: " + c.error};
    const double revin = row.cells[0].mean, warm = row.cells[1].mean, searched = row.cells[2].mean;
    const double warm_val = mean_of(row.cells[1].val_mse), search_val = mean_of(row.cells[2].val_mse);
    const auto& ws = *row.cells[1].shape;
    const auto& ss = *row.cells[2].shape;
    const bool ok = warm < revin && search_val <= warm_val;
    return {ok, "test MSE revin " + fmt(revin) + ", norin-warm " + fmt(warm) + ", norin-search " + fmt(searched) +
                    "; val MSE warm " + fmt(warm_val) + ", search " + fmt(search_val) + "; shapes warm (" +
                    fmt(ws.delta[0]) + ", " + fmt(ws.epsilon[0]) + ") search (" + fmt(ss.delta[0]) + ", " +
                    fmt(ss.epsilon[0]) + ")"};
}

// 9. degeneration
Outcome degeneration() {
    auto x = benchmark_config();
    x.train.early_stop_patience = 0;
    x.train.shape_lr = 1e-2;
    const auto series = benchmark_series();
    const auto b = default_benchmark();
    const auto start = ShapeParams::shared_pair(series.channels(), b.params.delta, b.params.epsilon);
    const auto r = degeneration_run(x, series, start);
    std::string finals;
    for (const auto& s : r.summaries) finals += (finals.empty() ? "" : ", ") + fmt(s.final_delta);
    return {r.increased >= 4, std::to_string(r.increased) + " of 5 seeds drift up from delta " +
                                  fmt(b.params.delta) + "; final deltas " + finals};
}

// 10. reproducibility
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.emplace_back(e.path().filename().string(), read_file(e.path().string()));
    std::sort(out.begin(), out.end());
    return out;
}

Outcome reproducibility() {
    const std::string data = "synth:L=1500,C=2";
    std::vector<fs::path> dirs;
    std::string how;
    for (int rep = 0; rep < 2; ++rep) {
        const fs::path dir = work_dir / ("repro_" + std::to_string(rep));
        fs::remove_all(dir);
        fs::create_directories(dir);
        dirs.push_back(dir);
        if (!cli_path.empty()) {
            how = "cli";
            const std::string common = " --data " + data + " --T 24 --H 6 --epochs 3";
            const std::string d = dir.string() + "/";
            const std::vector<std::string> cmds{
                "search" + common + " --trials 8 --startup 4 --out " + d + "best.json --history " + d + "trials.jsonl",
                "compare" + common + " --normalizers revin,norin-warm,norin-search --trials 6 --startup 3 --seeds 1,2 --out " + d +
                    "table.csv",
                "grid" + common + " --delta 1.0:2.0:0.5 --epsilon -0.5:0.0:0.5 --seed 42 --out " + d + "grid.csv"};
            for (const auto& c : cmds) {
                const std::string full = "\"" + cli_path + "\" " + c + " > /dev/null";
                if (std::system(full.c_str()) != 0) return {false, "command failed: " + full};
            }
        } else {
            how = "library";
            ExperimentConfig x;
            x.data = data;
            x.train.T = 24;
            x.train.H = 6;
            x.horizons = {6};
            x.train.epochs = 3;
            x.tpe.n_trials = 8;
            x.tpe.n_startup = 4;
            x.seeds = {1, 2};
            x.normalizers = {"revin", "norin-warm", "norin-search"};
            const auto series = load_series(data);
            const auto r = search(series, x.split, x.train, x.tpe, SearchSpace{x.box, x.mode, series.channels()});
            write_file_atomic((dir / "best.json").string(), best_json(r).dump(2));
            write_file_atomic((dir / "trials.jsonl").string(), history_jsonl(r.history));
            const auto t = compare(x, series);
            write_file_atomic((dir / "table.csv").string(), comparison_csv(t));
            write_file_atomic((dir / "table.json").string(), to_json(t).dump(2));
            x.train.seed = 42;
            const auto g = grid_sweep(x, series, parse_range("1.0:2.0:0.5"), parse_range("-0.5:0.0:0.5"));
            write_file_atomic((dir / "grid.csv").string(), grid_csv(g));
        }
    }
    const auto a = snapshot(dirs[0]), b = snapshot(dirs[1]);
    return {a == b && a.size() >= 5, how + " runs produced " + std::to_string(a.size()) + " artifacts each, " +
                                         (a == b ? "byte-identical" : "DIFFERENT")};
}

// 11. grid protocol
std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

Outcome grid_protocol() {
    ExperimentConfig x;
    x.data = "synth:L=1200";
    x.train.T = 48;
    x.train.H = 12;
    x.horizons = {12};
    x.train.epochs = 2;
    x.train.seed = 42;
    const auto series = load_series(x.data);
    const auto g = grid_sweep(x, series, parse_range("3.0:5.0:0.2"), parse_range("-1.0:0.0:0.1"));
    const std::string csv = grid_csv(g);
    auto lines = split_on(csv, '\n');
    std::vector<std::string> problems;
    if (g.deltas.size() != 11 || g.epsilons.size() != 11) problems.push_back("axis sizes");
    if (lines.size() != 12) problems.push_back(std::to_string(lines.size()) + " csv lines");
    std::size_t cells = 0, stars = 0;
    double min_cell = INFINITY, starred = NAN;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto f = split_on(lines[i], ',');
        if (f.size() != 12) problems.push_back("line " + std::to_string(i) + " has " + std::to_string(f.size()) + " fields");
        if (i == 0) {
            if (f.empty() || f[0] != "delta\\epsilon") problems.push_back("header corner");
            for (std::size_t j = 1; j < f.size(); ++j)
                if (std::abs(std::stod(f[j]) - (-1.0 + 0.1 * static_cast<double>(j - 1))) > 1e-9)
                    problems.push_back("epsilon header " + f[j]);
            continue;
        }
        if (std::abs(std::stod(f[0]) - (3.0 + 0.2 * static_cast<double>(i - 1))) > 1e-9)
            problems.push_back("delta label " + f[0]);
        for (std::size_t j = 1; j < f.size(); ++j) {
            std::string cell = f[j];
            const bool star = !cell.empty() && cell.back() == '*';
            if (star) cell.pop_back();
            const double v = std::stod(cell);
            ++cells;
            min_cell = std::min(min_cell, v);
            if (star) {
                ++stars;
                starred = v;
                if (i - 1 != g.argmin_row || j - 1 != g.argmin_col) problems.push_back("star off argmin");
            }
        }
    }
    double min_matrix = INFINITY;
    for (double v : g.test_mse.data) min_matrix = std::min(min_matrix, v);
    if (cells != 121) problems.push_back(std::to_string(cells) + " cells");
    if (stars != 1) problems.push_back(std::to_string(stars) + " markers");
    if (starred != min_cell) problems.push_back("marked cell is not the minimum");
    if (g.test_mse(g.argmin_row, g.argmin_col) != min_matrix) problems.push_back("argmin mismatch");
    std::string detail = std::to_string(cells) + " cells, " + std::to_string(stars) + " marker at (delta " +
                         fmt(g.deltas[g.argmin_row]) + ", epsilon " + fmt(g.epsilons[g.argmin_col]) + ") = " +
                         fmt(min_matrix);
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
        else if (a == "--cli" && i + 1 < argc) cli_path = argv[++i];
        else if (a == "--work" && i + 1 < argc) work_dir = argv[++i];
        else {
            std::cerr << "usage: acceptance [--only N] [--cli PATH] [--work DIR]\n";
            return 1;
        }
    }
    if (work_dir.empty()) work_dir = fs::temp_directory_path() / "norin_acceptance";
    fs::create_directories(work_dir);

    const std::vector<Criterion> criteria{
        {1, "round trip", 1.0, round_trip},
        {2, "near-linear limit", 0.0, near_linear},
        {3, "gradient suite", 30.0, gradients},
        {4, "fit recovery", 5.0, fit_recovery},
        {5, "affine invariance", 0.0, affine_invariance},
        {6, "wilcoxon", 5.0, wilcoxon},
        {7, "tpe sanity", 10.0, tpe_sanity},
        {8, "desk-scale end to end", 600.0, end_to_end},
        {9, "degeneration", 300.0, degeneration},
        {10, "reproducibility", 0.0, reproducibility},
        {11, "grid protocol", 0.0, grid_protocol},
    };

    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s) + " s budget";
        }
        if (!o.pass) ++failed;
        std::printf("[%s] %2d %-22s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    if (!ran) {
        std::cerr << "no criterion " << only << "\n";
        return 1;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed ? 1 : 0;
}
