#include "norin/shape_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "norin/errors.hpp"

namespace norin {

std::vector<double> SearchSpace::encode(const ShapeParams& shape) const {
    if (shape.channels_count() != channels) throw DataError("shape does not match search space channels");
    if (mode == ShapeMode::Shared) return {shape.delta[0], shape.epsilon[0]};
    std::vector<double> p = shape.delta;
    p.insert(p.end(), shape.epsilon.begin(), shape.epsilon.end());
    return p;
}

ShapeParams SearchSpace::decode(const std::vector<double>& point) const {
    if (point.size() != dims()) throw DataError("point does not match search space dimension");
    if (mode == ShapeMode::Shared) return ShapeParams::shared_pair(channels, point[0], point[1]);
    ShapeParams s;
    s.shared = false;
    s.delta.assign(point.begin(), point.begin() + static_cast<std::ptrdiff_t>(channels));
    s.epsilon.assign(point.begin() + static_cast<std::ptrdiff_t>(channels), point.end());
    return s;
}

bool SearchSpace::contains(const ShapeParams& shape) const {
    const auto p = encode(shape);
    for (std::size_t a = 0; a < p.size(); ++a)
        if (!(p[a] >= lo(a) && p[a] <= hi(a))) return false;
    return true;
}

void SearchSpace::validate() const {
    box.validate();
    if (channels == 0) throw DataError("search space needs at least one channel");
}

nlohmann::json to_json(const TrialRecord& t) {
    return {{"index", t.index},
            {"candidate", to_json(t.candidate)},
            {"objective", t.objective},
            {"seed", t.seed},
            {"status", t.status == TrialStatus::Complete ? "complete" : "failed"},
            {"error", t.error}};
}

void TpeConfig::validate() const {
    if (n_trials == 0) throw DataError("n_trials must be positive");
    if (!(n_startup < n_trials) && n_trials > 1) throw DataError("n_startup must be below n_trials");
    if (!(gamma_frac > 0.0 && gamma_frac <= 0.5)) throw DataError("gamma_frac must lie in (0, 0.5]");
    if (n_candidates == 0) throw DataError("n_candidates must be positive");
    if (bandwidth_rule != "scott" && bandwidth_rule != "scott-narrow")
        throw DataError("unknown bandwidth rule: " + bandwidth_rule);
}

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

}  // namespace

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double x = mean + sd * rng.normal();
        if (x >= lo && x <= hi) return x;
    }
    return std::clamp(mean, lo, hi);
}

ParzenAxis::ParzenAxis(std::vector<double> centers, double lo, double hi, bool adaptive_clip)
    : centers_(std::move(centers)), lo_(lo), hi_(hi) {
    const double n = static_cast<double>(centers_.size());
    double mean = 0.0;
    for (double c : centers_) mean += c;
    mean /= n;
    double var = 0.0;
    for (double c : centers_) var += (c - mean) * (c - mean);
    const double sigma = std::sqrt(var / n);
    // Scott's rule for a 1-D Gaussian kernel. The adaptive clip keeps a tight
    // cluster of good points from shrinking the kernel to nothing.
    double floor = 1e-3 * (hi - lo);
    if (adaptive_clip) floor = std::max(floor, (hi - lo) / std::min(100.0, n + 1.0));
    bandwidth_ = std::max(1.059 * sigma * std::pow(n, -0.2), floor);
    for (double c : centers_) {
        const double mass = normal_cdf((hi_ - c) / bandwidth_) - normal_cdf((lo_ - c) / bandwidth_);
        log_mass_.push_back(std::log(std::max(mass, 1e-300)));
    }
}

double ParzenAxis::log_pdf(double x) const {
    std::vector<double> terms(centers_.size());
    const double log_h = std::log(bandwidth_);
    for (std::size_t k = 0; k < centers_.size(); ++k) {
        const double u = (x - centers_[k]) / bandwidth_;
        terms[k] = -0.5 * u * u - kLogSqrt2Pi - log_h - log_mass_[k];
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(centers_.size()));
}

double ParzenAxis::sample(Rng& rng) const {
    const double center = centers_[rng.below(centers_.size())];
    return truncated_normal(rng, center, bandwidth_, lo_, hi_);
}

double TpeModel::log_good(const std::vector<double>& x) const {
    double acc = 0.0;
    for (std::size_t a = 0; a < good.size(); ++a) acc += good[a].log_pdf(x[a]);
    return acc;
}

double TpeModel::log_bad(const std::vector<double>& x) const {
    double acc = 0.0;
    for (std::size_t a = 0; a < bad.size(); ++a) acc += bad[a].log_pdf(x[a]);
    return acc;
}

bool build_tpe_model(const std::vector<TrialRecord>& history, const SearchSpace& space, const TpeConfig& config,
                     TpeModel& model) {
    std::vector<const TrialRecord*> complete;
    std::vector<const TrialRecord*> failed;
    for (const auto& t : history) (t.status == TrialStatus::Complete ? complete : failed).push_back(&t);
    std::stable_sort(complete.begin(), complete.end(), [](const TrialRecord* a, const TrialRecord* b) {
        if (a->objective != b->objective) return a->objective < b->objective;
        return a->index < b->index;
    });
    const auto n_good = static_cast<std::size_t>(std::ceil(config.gamma_frac * static_cast<double>(complete.size())));
    if (n_good == 0) return false;
    std::vector<std::vector<double>> good_pts, bad_pts;
    for (std::size_t k = 0; k < complete.size(); ++k)
        (k < n_good ? good_pts : bad_pts).push_back(space.encode(complete[k]->candidate));
    for (const auto* t : failed) bad_pts.push_back(space.encode(t->candidate));
    if (bad_pts.empty()) return false;

    model.good.clear();
    model.bad.clear();
    for (std::size_t a = 0; a < space.dims(); ++a) {
        std::vector<double> g, b;
        for (const auto& p : good_pts) g.push_back(p[a]);
        for (const auto& p : bad_pts) b.push_back(p[a]);
        const bool clip = config.bandwidth_rule == "scott";
        model.good.emplace_back(std::move(g), space.lo(a), space.hi(a), clip);
        model.bad.emplace_back(std::move(b), space.lo(a), space.hi(a), clip);
    }
    return true;
}

ShapeParams propose(const std::vector<TrialRecord>& history, const SearchSpace& space, const TpeConfig& config,
                    const ShapeParams& warm_start) {
    space.validate();
    config.validate();
    if (!space.contains(warm_start)) throw DataError("warm start lies outside the search box");

    const std::size_t k = history.size();
    if (k == 0) return warm_start;

    Rng rng(mix_seed(config.seed, k));
    const std::vector<double> center = space.encode(warm_start);
    auto prior_draw = [&] {
        std::vector<double> p(space.dims());
        for (std::size_t a = 0; a < p.size(); ++a) {
            const double width = space.hi(a) - space.lo(a);
            p[a] = truncated_normal(rng, center[a], 0.25 * width, space.lo(a), space.hi(a));
        }
        return space.decode(p);
    };
    if (k < config.n_startup) return prior_draw();

    TpeModel model;
    if (!build_tpe_model(history, space, config, model)) return prior_draw();

    std::vector<double> best_point;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < config.n_candidates; ++j) {
        std::vector<double> x(space.dims());
        for (std::size_t a = 0; a < x.size(); ++a) x[a] = model.good[a].sample(rng);
        const double score = model.log_good(x) - model.log_bad(x);
        if (best_point.empty() || score > best_score) {
            best_score = score;
            best_point = std::move(x);
        }
    }
    return space.decode(best_point);
}

TrialRecord evaluate_trial(const ShapeParams& candidate, const MultiSeries& series, const SplitSpec& split,
                           const TrainConfig& config, std::uint64_t hpo_seed) {
    TrialRecord rec;
    rec.candidate = candidate;
    rec.seed = hpo_seed;
    TrainConfig cfg = config;
    cfg.seed = hpo_seed;
    cfg.joint_shape_training = false;
    try {
        const RunResult run = train(series, split, NormalizerSpec{NormalizerKind::NoRIN, false}, candidate, cfg);
        rec.objective = run.best_val_mse;
        rec.status = TrialStatus::Complete;
    } catch (const RunError& e) {
        rec.status = TrialStatus::Failed;
        rec.objective = kFailedObjective;
        rec.error = e.what();
    }
    return rec;
}

BoundaryContacts boundary_contacts(const ShapeParams& shape, const ShapeBox& box) {
    constexpr double tol = 1e-6;
    BoundaryContacts b;
    for (double d : shape.delta) {
        b.delta_lo = b.delta_lo || std::abs(d - box.delta_lo) <= tol;
        b.delta_hi = b.delta_hi || std::abs(d - box.delta_hi) <= tol;
    }
    for (double e : shape.epsilon) {
        b.eps_lo = b.eps_lo || std::abs(e - box.eps_lo) <= tol;
        b.eps_hi = b.eps_hi || std::abs(e - box.eps_hi) <= tol;
    }
    return b;
}

SearchResult search(const ShapeObjective& objective, const SearchSpace& space, const TpeConfig& config,
                    const ShapeParams& warm_start) {
    config.validate();
    SearchResult result;
    for (std::size_t k = 0; k < config.n_trials; ++k) {
        TrialRecord rec;
        rec.index = k;
        rec.candidate = propose(result.history, space, config, warm_start);
        rec.seed = config.seed;
        try {
            rec.objective = objective(rec.candidate, k);
            if (!std::isfinite(rec.objective)) throw RunError("non-finite objective");
            rec.status = TrialStatus::Complete;
        } catch (const RunError& e) {
            rec.status = TrialStatus::Failed;
            rec.objective = kFailedObjective;
            rec.error = e.what();
        }
        result.history.push_back(std::move(rec));
    }

    const TrialRecord* best = nullptr;
    for (const auto& t : result.history)
        if (t.status == TrialStatus::Complete && (!best || t.objective < best->objective)) best = &t;
    if (!best) throw RunError("shape search: all trials failed");
    result.best = best->candidate;
    result.best_objective = best->objective;
    result.best_index = best->index;
    result.boundary = boundary_contacts(result.best, space.box);
    return result;
}

SearchResult search(const MultiSeries& series, const SplitSpec& split, const TrainConfig& train_config,
                    const TpeConfig& tpe, const SearchSpace& space, double z, std::uint64_t hpo_seed) {
    WarmStartResult warm = warm_start(series, split, space.mode, z, space.box);
    SearchSpace sp = space;
    sp.channels = series.channels();
    ShapeParams start = warm.shape;
    start.channels.clear();
    SearchResult result = search(
        [&](const ShapeParams& candidate, std::size_t) {
            TrialRecord rec = evaluate_trial(candidate, series, split, train_config, hpo_seed);
            if (rec.status == TrialStatus::Failed) throw RunError(rec.error);
            return rec.objective;
        },
        sp, tpe, start);
    for (auto& t : result.history) t.seed = hpo_seed;
    result.best.channels = series.channel_names;
    result.warm = std::move(warm);
    return result;
}

nlohmann::json best_json(const SearchResult& r) {
    nlohmann::json j = to_json(r.best);
    j["objective"] = r.best_objective;
    j["trial"] = r.best_index;
    j["boundary"] = {{"delta_lo", r.boundary.delta_lo},
                     {"delta_hi", r.boundary.delta_hi},
                     {"eps_lo", r.boundary.eps_lo},
                     {"eps_hi", r.boundary.eps_hi}};
    return j;
}

std::string history_jsonl(const std::vector<TrialRecord>& history) {
    std::string out;
    for (const auto& t : history) out += to_json(t).dump() + "\n";
    return out;
}

}  // namespace norin
