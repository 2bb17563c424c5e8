#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/backbone.hpp"
#include "norin/normalizers.hpp"
#include "norin/rng.hpp"
#include "norin/series.hpp"
#include "norin/shape_fit.hpp"

namespace norin {

/// Box search space over (delta, epsilon). Shared mode searches one pair
/// (2 dims); per-channel mode searches C pairs laid out as
/// [delta_0 .. delta_{C-1}, eps_0 .. eps_{C-1}].
struct SearchSpace {
    ShapeBox box;
    ShapeMode mode = ShapeMode::Shared;
    std::size_t channels = 1;

    std::size_t dims() const { return mode == ShapeMode::Shared ? 2 : 2 * channels; }
    bool is_delta_axis(std::size_t axis) const { return axis < dims() / 2; }
    double lo(std::size_t axis) const { return is_delta_axis(axis) ? box.delta_lo : box.eps_lo; }
    double hi(std::size_t axis) const { return is_delta_axis(axis) ? box.delta_hi : box.eps_hi; }

    std::vector<double> encode(const ShapeParams& shape) const;
    ShapeParams decode(const std::vector<double>& point) const;
    bool contains(const ShapeParams& shape) const;
    void validate() const;
};

enum class TrialStatus { Complete, Failed };

struct TrialRecord {
    std::size_t index = 0;
    ShapeParams candidate;
    double objective = 0.0;
    std::uint64_t seed = 0;
    TrialStatus status = TrialStatus::Complete;
    std::string error;  // set for failed trials
};

/// Objective value recorded for failed trials; never enters the good set.
inline constexpr double kFailedObjective = 1e300;

nlohmann::json to_json(const TrialRecord& trial);

struct TpeConfig {
    std::size_t n_trials = 60;
    std::size_t n_startup = 10;
    double gamma_frac = 0.25;
    std::size_t n_candidates = 24;
    std::uint64_t seed = 42;
    /// "scott": Scott's rule floored at max(1e-3, 1 / min(100, n + 1)) of the
    /// axis range; "scott-narrow": Scott's rule floored at 1e-3 of the range only.
    std::string bandwidth_rule = "scott";

    void validate() const;
};

/// Truncated-Gaussian Parzen mixture on one axis of the box.
class ParzenAxis {
public:
    ParzenAxis(std::vector<double> centers, double lo, double hi, bool adaptive_clip = true);

    double bandwidth() const { return bandwidth_; }
    double log_pdf(double x) const;
    double sample(Rng& rng) const;

private:
    std::vector<double> centers_;
    double lo_;
    double hi_;
    double bandwidth_;
    std::vector<double> log_mass_;  // log of each component's probability inside [lo, hi]
};

/// Normal draw with the given mean/std truncated to [lo, hi] (rejection, then clamp).
double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi);

/// Good/bad Parzen models built from a history, exposed for inspection.
struct TpeModel {
    std::vector<ParzenAxis> good;
    std::vector<ParzenAxis> bad;

    double log_good(const std::vector<double>& x) const;
    double log_bad(const std::vector<double>& x) const;
};

/// Splits completed trials into the lowest ceil(gamma_frac * n) objectives
/// (ties by index) and the rest; failed trials join the bad set.
/// Returns false when either set would be empty.
bool build_tpe_model(const std::vector<TrialRecord>& history, const SearchSpace& space, const TpeConfig& config,
                     TpeModel& model);

/// Next candidate. Trial 0 is the warm start; trials below n_startup come
/// from a truncated normal centered at the warm start with per-axis std
/// 0.25 * (hi - lo); later trials maximize good/bad density over
/// n_candidates draws from the good mixture. Pure in (history, config).
ShapeParams propose(const std::vector<TrialRecord>& history, const SearchSpace& space, const TpeConfig& config,
                    const ShapeParams& warm_start);

/// g(delta, epsilon): best validation MSE of a NoRIN run trained with the
/// candidate frozen and config.seed replaced by hpo_seed.
TrialRecord evaluate_trial(const ShapeParams& candidate, const MultiSeries& series, const SplitSpec& split,
                           const TrainConfig& config, std::uint64_t hpo_seed);

struct BoundaryContacts {
    bool delta_lo = false;
    bool delta_hi = false;
    bool eps_lo = false;
    bool eps_hi = false;

    bool any() const { return delta_lo || delta_hi || eps_lo || eps_hi; }
};

struct SearchResult {
    ShapeParams best;
    double best_objective = 0.0;
    std::size_t best_index = 0;
    BoundaryContacts boundary;
    std::vector<TrialRecord> history;
    WarmStartResult warm;
};

/// Objective callback for the generic search; throw RunError to fail a trial.
using ShapeObjective = std::function<double(const ShapeParams&, std::size_t trial_index)>;

SearchResult search(const ShapeObjective& objective, const SearchSpace& space, const TpeConfig& config,
                    const ShapeParams& warm_start);

/// Full pipeline: closed-form warm start on the train split, then TPE over
/// the box against validation MSE.
SearchResult search(const MultiSeries& series, const SplitSpec& split, const TrainConfig& train_config,
                    const TpeConfig& tpe, const SearchSpace& space, double z = kDefaultProbeZ,
                    std::uint64_t hpo_seed = 42);

BoundaryContacts boundary_contacts(const ShapeParams& shape, const ShapeBox& box);

nlohmann::json best_json(const SearchResult& result);
std::string history_jsonl(const std::vector<TrialRecord>& history);

}  // namespace norin
