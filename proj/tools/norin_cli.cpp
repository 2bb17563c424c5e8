#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/errors.hpp"
#include "norin/harness.hpp"

namespace fs = std::filesystem;
using namespace norin;

namespace {

// JSON documents are flattened into CLI11 items; anything else is read as TOML.
// Keys outside a section belong to the invoked subcommand.
class JsonOrToml : public CLI::ConfigTOML {
public:
    std::string section;

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::string text((std::istreambuf_iterator<char>(input)), std::istreambuf_iterator<char>());
        const auto first = text.find_first_not_of(" \t\r\n");
        std::vector<CLI::ConfigItem> items;
        if (first == std::string::npos || text[first] != '{') {
            std::istringstream again(text);
            items = CLI::ConfigTOML::from_config(again);
        } else {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
            }
            flatten(j, {}, items);
        }
        if (!section.empty())
            for (auto& item : items)
                if (item.parents.empty()) item.parents = {section};
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void flatten(const nlohmann::json& j, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, v] : j.items()) {
            if (v.is_object()) {
                auto p = parents;
                p.push_back(key);
                flatten(v, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (v.is_array()) {
                for (const auto& e : v) item.inputs.push_back(scalar(e));
            } else {
                item.inputs.push_back(scalar(v));
            }
            out.push_back(std::move(item));
        }
    }
};

struct Common {
    std::string data = "synth:";
    std::string timestamp_column = "date";
    std::string label;
    std::size_t T = 96;
    std::size_t H = 24;
    std::size_t epochs = 20;
    std::size_t batch = 32;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int patience = 3;
    bool per_channel_weights = false;
    std::vector<double> split{0.7, 0.1, 0.2};
    std::string mode = "shared";
    double z = kDefaultProbeZ;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--data", c.data, "CSV path or synth:key=value,... spec")->capture_default_str();
    sub->add_option("--timestamp-column", c.timestamp_column, "CSV column to drop, or 'none'")->capture_default_str();
    sub->add_option("--label", c.label, "dataset label in tables");
    sub->add_option("--T", c.T, "lookback length")->capture_default_str();
    sub->add_option("--H", c.H, "horizon length")->capture_default_str();
    sub->add_option("--epochs", c.epochs)->capture_default_str();
    sub->add_option("--batch", c.batch, "mini-batch size")->capture_default_str();
    sub->add_option("--lr", c.lr)->capture_default_str();
    sub->add_option("--weight-decay", c.weight_decay)->capture_default_str();
    sub->add_option("--patience", c.patience, "early-stopping patience; <= 0 disables")->capture_default_str();
    sub->add_flag("--per-channel-weights", c.per_channel_weights, "one linear head per channel");
    sub->add_option("--split", c.split, "train,val,test fractions")->delimiter(',')->expected(3)->capture_default_str();
    sub->add_option("--mode", c.mode, "shape mode: shared|per-channel")->capture_default_str();
    sub->add_option("--z", c.z, "quantile probe for the closed-form fit")->capture_default_str();
}

std::optional<std::string> timestamp(const Common& c) {
    if (c.timestamp_column == "none" || c.timestamp_column.empty()) return std::nullopt;
    return c.timestamp_column;
}

ExperimentConfig experiment(const Common& c) {
    ExperimentConfig x;
    x.data = c.data;
    x.dataset_label = c.label;
    x.horizons = {c.H};
    x.mode = shape_mode_from_string(c.mode);
    x.z = c.z;
    x.train.T = c.T;
    x.train.H = c.H;
    x.train.epochs = c.epochs;
    x.train.batch_size = c.batch;
    x.train.lr = c.lr;
    x.train.weight_decay = c.weight_decay;
    x.train.early_stop_patience = c.patience;
    x.train.per_channel_weights = c.per_channel_weights;
    x.split = {c.split.at(0), c.split.at(1), c.split.at(2)};
    return x;
}

void write(const std::string& path, const std::string& content) {
    write_file_atomic(path, content);
    std::cout << "wrote " << path << "\n";
}

std::string sibling(const std::string& path, const std::string& suffix) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

ShapeParams load_shape_file(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("corrupt shape file " + path + ": " + e.what());
    }
    return shape_from_json(j.contains("shape") ? j.at("shape") : j);
}

struct ShapeFlags {
    std::string file;
    std::optional<double> delta;
    std::optional<double> epsilon;
};

void add_shape_flags(CLI::App* sub, ShapeFlags& s) {
    auto* f = sub->add_option("--shape", s.file, "shape JSON (fit-shape or search output)");
    auto* d = sub->add_option("--delta", s.delta, "explicit shared delta");
    auto* e = sub->add_option("--epsilon", s.epsilon, "explicit shared epsilon");
    f->excludes(d)->excludes(e);
}

// --shape file, else explicit --delta/--epsilon, else the closed-form warm start.
ShapeParams resolve(const ShapeFlags& s, const ExperimentConfig& x, const MultiSeries& series) {
    if (!s.file.empty()) {
        auto shape = load_shape_file(s.file);
        if (shape.channels_count() != series.channels())
            throw DataError("shape file has " + std::to_string(shape.channels_count()) + " channels, data has " +
                            std::to_string(series.channels()));
        return shape;
    }
    if (s.delta || s.epsilon)
        return ShapeParams::shared_pair(series.channels(), s.delta.value_or(1.0), s.epsilon.value_or(0.0));
    return warm_start(series, x.split, x.mode, x.z, x.box).shape;
}

ShapeBox box_from(const std::string& delta, const std::string& epsilon) {
    ShapeBox b;
    const auto d = parse_range(delta + (std::count(delta.begin(), delta.end(), ':') == 1 ? ":1" : ""));
    const auto e = parse_range(epsilon + (std::count(epsilon.begin(), epsilon.end(), ':') == 1 ? ":1" : ""));
    b.delta_lo = d.lo;
    b.delta_hi = d.hi;
    b.eps_lo = e.lo;
    b.eps_hi = e.hi;
    b.validate();
    return b;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NoRIN normalization experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    auto formatter = std::make_shared<JsonOrToml>();
    app.config_formatter(formatter);
    app.set_config("--config", "", "TOML or JSON file with option values; flags override it");

    Common c;
    ShapeFlags shape_flags;
    std::string out, history, normalizer = "norin", dir;
    std::uint64_t seed = 1, hpo_seed = 42, sampler_seed = 42;
    std::size_t trials = 60, startup = 10;
    std::string delta_box = "0.8:5.0", eps_box = "-1.0:1.0", bandwidth = "scott";
    std::string delta_range = "3.0:5.0:0.2", eps_range = "-1.0:0.0:0.1";
    std::vector<std::string> normalizers{"none", "revin", "norin"};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<std::size_t> horizons;
    std::string shape_source = "warm-start";
    double shape_lr = 1e-2;
    bool joint = false;
    std::string axis, checkpoint;
    std::vector<double> values;

    auto* fit = app.add_subcommand("fit-shape", "closed-form warm-start shape from the train split");
    add_common(fit, c);
    fit->add_option("--out", out, "shape JSON")->required();

    auto* srch = app.add_subcommand("search", "warm start plus TPE search over the shape box");
    add_common(srch, c);
    srch->add_option("--trials", trials)->capture_default_str();
    srch->add_option("--startup", startup, "random startup trials")->capture_default_str();
    srch->add_option("--delta", delta_box, "delta box lo:hi")->capture_default_str();
    srch->add_option("--epsilon", eps_box, "epsilon box lo:hi")->capture_default_str();
    srch->add_option("--hpo-seed", hpo_seed, "training seed of every trial")->capture_default_str();
    srch->add_option("--sampler-seed", sampler_seed)->capture_default_str();
    srch->add_option("--bandwidth", bandwidth, "scott|scott-narrow")->capture_default_str();
    srch->add_option("--out", out, "best shape JSON")->required();
    srch->add_option("--history", history, "trial history JSONL");

    auto* trn = app.add_subcommand("train", "one training run with a frozen or jointly trained shape");
    add_common(trn, c);
    trn->add_option("--normalizer", normalizer, "none|revin|revin-affine|norin")->capture_default_str();
    add_shape_flags(trn, shape_flags);
    trn->add_option("--seed", seed)->capture_default_str();
    trn->add_flag("--joint", joint, "train the shape with the backbone");
    trn->add_option("--shape-lr", shape_lr)->capture_default_str();
    trn->add_option("--checkpoint", checkpoint, "write the restored model here");
    trn->add_option("--out", out, "run JSON")->required();

    auto* cmp = app.add_subcommand("compare", "normalizer comparison over seeds");
    add_common(cmp, c);
    cmp->add_option("--normalizers", normalizers)->delimiter(',')->capture_default_str();
    cmp->add_option("--seeds", seeds)->delimiter(',')->capture_default_str();
    cmp->add_option("--horizons", horizons, "overrides --H")->delimiter(',');
    cmp->add_option("--shape-source", shape_source, "warm-start|search|explicit")->capture_default_str();
    cmp->add_option("--delta", shape_flags.delta, "explicit delta");
    cmp->add_option("--epsilon", shape_flags.epsilon, "explicit epsilon");
    cmp->add_option("--trials", trials, "search trials")->capture_default_str();
    cmp->add_option("--startup", startup, "random startup trials")->capture_default_str();
    cmp->add_option("--sampler-seed", sampler_seed)->capture_default_str();
    cmp->add_option("--hpo-seed", hpo_seed)->capture_default_str();
    cmp->add_option("--out", out, "table CSV")->required();

    auto* grd = app.add_subcommand("grid", "test MSE over a delta x epsilon grid");
    add_common(grd, c);
    grd->add_option("--delta", delta_range, "lo:hi:step")->capture_default_str();
    grd->add_option("--epsilon", eps_range, "lo:hi:step")->capture_default_str();
    grd->add_option("--seed", seed)->capture_default_str();
    grd->add_option("--out", out, "grid CSV")->required();

    auto* deg = app.add_subcommand("degenerate", "joint shape training trajectories");
    add_common(deg, c);
    deg->add_option("--shape-lr", shape_lr)->capture_default_str();
    deg->add_option("--seeds", seeds)->delimiter(',')->capture_default_str();
    add_shape_flags(deg, shape_flags);
    deg->add_option("--out", out, "trajectory JSONL")->required();

    auto* swp = app.add_subcommand("sweep", "one-at-a-time sensitivity sweep");
    add_common(swp, c);
    swp->add_option("--axis", axis, "lr|batch|epochs|T|seed")->required();
    swp->add_option("--values", values)->delimiter(',')->required();
    swp->add_option("--seed", seed)->capture_default_str();
    add_shape_flags(swp, shape_flags);
    swp->add_option("--out", out, "sweep CSV")->required();

    auto* rep = app.add_subcommand("report", "render artifacts to CSV and text tables");
    rep->add_option("--dir", dir, "artifact directory")->required();
    rep->add_option("--out", out, "output directory")->required();

    for (int i = 1; i < argc; ++i)
        if (auto* sub = app.get_subcommand_no_throw(argv[i])) {
            formatter->section = sub->get_name();
            break;
        }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (rep->parsed()) {
            fs::create_directories(out);
            for (const auto& name : report(dir, out)) std::cout << "wrote " << (fs::path(out) / name).string() << "\n";
            return 0;
        }

        ExperimentConfig x = experiment(c);
        x.train.seed = seed;
        x.hpo_seed = hpo_seed;
        x.tpe.n_trials = trials;
        x.tpe.n_startup = startup;
        x.tpe.seed = sampler_seed;
        x.tpe.bandwidth_rule = bandwidth;
        const MultiSeries series = load_series(c.data, timestamp(c));

        if (fit->parsed()) {
            const auto r = warm_start(series, x.split, x.mode, x.z, x.box);
            write(out, tag(fit_report_json(r), "fit").dump(2) + "\n");
        } else if (srch->parsed()) {
            x.box = box_from(delta_box, eps_box);
            x.train.validate();
            SearchSpace space{x.box, x.mode, series.channels()};
            const auto r = search(series, x.split, x.train, x.tpe, space, x.z, x.hpo_seed);
            write(out, tag(best_json(r), "best").dump(2) + "\n");
            if (!history.empty()) write(history, history_jsonl(r.history));
            if (r.boundary.any()) std::cerr << "note: best shape touches the box boundary\n";
        } else if (trn->parsed()) {
            x.train.joint_shape_training = joint;
            x.train.shape_lr = shape_lr;
            x.train.validate();
            const auto col = parse_column(normalizer, ShapeSource::WarmStart);
            const ShapeParams shape = col.normalizer.kind == NormalizerKind::NoRIN
                                          ? resolve(shape_flags, x, series)
                                          : ShapeParams::shared_pair(series.channels(), 1.0, 0.0);
            const auto run = train(series, x.split, col.normalizer, shape, x.train);
            write(out, tag(to_json(run), "run").dump(2) + "\n");
            if (!checkpoint.empty()) {
                save_checkpoint(checkpoint, run.model, run.seed, run.config_hash);
                std::cout << "wrote " << checkpoint << "\n";
            }
        } else if (cmp->parsed()) {
            x.normalizers = normalizers;
            x.seeds = seeds;
            if (!horizons.empty()) x.horizons = horizons;
            x.shape_source = shape_source_from_string(shape_source);
            x.explicit_delta = shape_flags.delta.value_or(1.0);
            x.explicit_epsilon = shape_flags.epsilon.value_or(0.0);
            x.validate();
            const auto table = compare(x, series);
            write(out, comparison_csv(table));
            write(sibling(out, ".json"), tag(to_json(table), "comparison").dump(2) + "\n");
            std::optional<std::string> ref;
            for (const auto& col : table.columns)
                if (col.rfind("norin", 0) == 0) {
                    ref = col;
                    break;
                }
            if (ref && table.columns.size() > 1)
                write(sibling(out, "_significance.json"),
                      tag(to_json(significance(table, *ref)), "significance").dump(2) + "\n");
            bool any_failed = false;
            for (const auto& row : table.rows)
                for (const auto& cell : row.cells) any_failed = any_failed || cell.failed;
            if (any_failed) {
                std::cerr << "error: some cells failed; see the table\n";
                return 3;
            }
        } else if (grd->parsed()) {
            x.validate();
            const auto g = grid_sweep(x, series, parse_range(delta_range), parse_range(eps_range));
            write(out, grid_csv(g));
            write(sibling(out, ".json"), tag(to_json(g), "grid").dump(2) + "\n");
        } else if (deg->parsed()) {
            x.seeds = seeds;
            x.train.joint_shape_training = true;
            x.train.shape_lr = shape_lr;
            x.validate();
            const auto start = resolve(shape_flags, x, series);
            const auto r = degeneration_run(x, series, start);
            write(out, trajectory_jsonl(r));
            write(sibling(out, "_summary.json"), tag(to_json(r), "degeneration").dump(2) + "\n");
            std::cout << r.increased << " of " << r.summaries.size() << " seeds drifted to larger delta\n";
        } else if (swp->parsed()) {
            x.validate();
            const auto shape = resolve(shape_flags, x, series);
            const auto t = sensitivity_sweep(x, series, shape, sweep_axis_from_string(axis), values);
            write(out, sweep_csv(t));
            write(sibling(out, ".json"), tag(to_json(t), "sweep").dump(2) + "\n");
        }
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const RunError& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
