#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/backbone.hpp"
#include "norin/series.hpp"
#include "norin/shape_fit.hpp"
#include "norin/shape_search.hpp"

namespace norin {

// ---------------------------------------------------------------------------
// Data sources

/// Parses "synth:key=value,..." (keys: seed, L, C, delta, epsilon, loc,
/// scale, trend, season, period). Unknown keys are an error.
struct SynthSpec {
    std::uint64_t seed = 7;
    std::size_t L = 8000;
    std::size_t C = 3;
    SynthParams params;
};

SynthSpec parse_synth_spec(const std::string& spec);

/// The desk-scale benchmark used throughout the harness defaults.
SynthSpec default_benchmark();

/// "synth:..." or a CSV path.
MultiSeries load_series(const std::string& source, const std::optional<std::string>& timestamp_column = "date");

// ---------------------------------------------------------------------------
// Experiment configuration

enum class ShapeSource { WarmStart, Search, Explicit };

ShapeSource shape_source_from_string(const std::string& s);
const char* to_string(ShapeSource s);

struct ExperimentConfig {
    std::string data = "synth:";
    std::string dataset_label;  // defaults to the data source string
    std::vector<std::size_t> horizons{24};
    std::vector<std::string> normalizers{"none", "revin", "norin"};
    ShapeSource shape_source = ShapeSource::WarmStart;
    double explicit_delta = 1.0;
    double explicit_epsilon = 0.0;
    ShapeMode mode = ShapeMode::Shared;
    double z = kDefaultProbeZ;
    ShapeBox box;
    TpeConfig tpe;
    std::uint64_t hpo_seed = 42;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    TrainConfig train;
    SplitSpec split;
    std::string output_dir = ".";

    void validate() const;
    std::string label() const { return dataset_label.empty() ? data : dataset_label; }
};

/// One comparison column: "none", "revin", "revin-affine", "norin" (shape
/// from config.shape_source), "norin-warm", "norin-search", "norin-explicit".
struct ColumnSpec {
    std::string label;
    NormalizerSpec normalizer;
    std::optional<ShapeSource> shape_source;  // NoRIN only
};

ColumnSpec parse_column(const std::string& token, ShapeSource default_source);

/// Resolves the frozen NoRIN shape for a horizon according to `source`.
ShapeParams resolve_shape(const ExperimentConfig& config, const MultiSeries& series, ShapeSource source,
                          std::size_t horizon);

// ---------------------------------------------------------------------------
// Comparison tables

struct ComparisonCell {
    double mean = 0.0;
    std::optional<double> std;  // sample std, present iff >= 2 seeds
    std::vector<double> test_mse;
    std::vector<double> val_mse;
    std::optional<ShapeParams> shape;
    bool failed = false;
    std::string error;
};

struct ComparisonRow {
    std::string dataset;
    std::size_t horizon = 0;
    std::vector<ComparisonCell> cells;
    std::optional<std::size_t> winner;  // lowest mean; ties by column order
};

struct ComparisonTable {
    std::vector<std::string> columns;
    std::vector<std::uint64_t> seeds;
    std::vector<ComparisonRow> rows;
};

ComparisonTable compare(const ExperimentConfig& config, const MultiSeries& series);

nlohmann::json to_json(const ComparisonTable& table);
ComparisonTable comparison_from_json(const nlohmann::json& j);
std::string comparison_csv(const ComparisonTable& table);

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

enum class WilcoxonMethod { Exact, NormalApprox };

struct WilcoxonResult {
    std::size_t n_pairs = 0;
    std::size_t n_effective = 0;  // nonzero differences
    std::size_t wins = 0;         // pairs with a > b
    double mean_delta = 0.0;      // mean of a - b over all pairs
    double w_plus = 0.0;
    double w_minus = 0.0;
    double W = 0.0;  // min(w_plus, w_minus)
    double p = 1.0;  // two-sided
    WilcoxonMethod method = WilcoxonMethod::Exact;
};

inline constexpr std::size_t kExactWilcoxonLimit = 25;

/// Paired two-sided test on d = a - b. Zero differences are dropped, ties
/// get average ranks; exact null distribution up to 25 nonzero pairs,
/// tie-corrected normal approximation with continuity correction beyond.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct SignificanceEntry {
    std::string baseline;
    WilcoxonResult result;
};

struct SignificanceReport {
    std::string reference;
    std::vector<SignificanceEntry> entries;
};

/// Pairs the per-row means of every other column (a) against `reference` (b).
SignificanceReport significance(const ComparisonTable& table, const std::string& reference);

nlohmann::json to_json(const SignificanceReport& report);
SignificanceReport significance_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Grid sweep

/// Inclusive lo:hi:step range.
struct RangeSpec {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    std::vector<double> values() const;
};

RangeSpec parse_range(const std::string& text);

struct GridResult {
    std::vector<double> deltas;    // rows
    std::vector<double> epsilons;  // columns
    Matrix test_mse;
    std::size_t argmin_row = 0;
    std::size_t argmin_col = 0;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;
};

/// One run per (delta, epsilon) cell at config.train.seed, first horizon.
GridResult grid_sweep(const ExperimentConfig& config, const MultiSeries& series, const RangeSpec& delta,
                      const RangeSpec& epsilon);

nlohmann::json to_json(const GridResult& grid);
GridResult grid_from_json(const nlohmann::json& j);
/// delta rows x epsilon columns; the argmin cell carries a trailing '*'.
std::string grid_csv(const GridResult& grid);

// ---------------------------------------------------------------------------
// Degeneration experiment

struct DegenerationSummary {
    std::uint64_t seed = 0;
    double initial_delta = 0.0;
    double final_delta = 0.0;
    double initial_epsilon = 0.0;
    double final_epsilon = 0.0;
    int drift_sign = 0;
    std::optional<std::size_t> first_increase_epoch;
    bool clamped = false;
};

struct DegenerationResult {
    std::vector<RunResult> runs;
    std::vector<DegenerationSummary> summaries;
    std::size_t increased = 0;  // seeds with final delta > initial delta
};

/// Joint-mode NoRIN training from `start`, one run per config seed.
DegenerationResult degeneration_run(const ExperimentConfig& config, const MultiSeries& series,
                                    const ShapeParams& start);

DegenerationSummary summarize_trajectory(const RunResult& run);

nlohmann::json to_json(const DegenerationResult& result);
std::string trajectory_jsonl(const DegenerationResult& result);

// ---------------------------------------------------------------------------
// Sensitivity sweeps

enum class SweepAxis { Lr, Batch, Epochs, T, Seed };

SweepAxis sweep_axis_from_string(const std::string& s);
const char* to_string(SweepAxis a);

struct SweepRow {
    double value = 0.0;
    double test_mse = 0.0;
    double val_mse = 0.0;
};

struct SweepTable {
    SweepAxis axis = SweepAxis::Seed;
    std::vector<SweepRow> rows;
    std::optional<double> mean;  // seed axis only
    std::optional<double> std;
    std::optional<double> cv;
};

/// One NoRIN run per value with `shape` frozen and everything else fixed.
SweepTable sensitivity_sweep(const ExperimentConfig& config, const MultiSeries& series, const ShapeParams& shape,
                             SweepAxis axis, std::span<const double> values);

nlohmann::json to_json(const SweepTable& table);
SweepTable sweep_from_json(const nlohmann::json& j);
std::string sweep_csv(const SweepTable& table);

// ---------------------------------------------------------------------------
// Artifacts and reports

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Artifact documents carry {"kind": ...}; trial histories are *.jsonl.
nlohmann::json tag(nlohmann::json doc, const std::string& kind);

struct RenderedFile {
    std::string name;
    std::string content;
};

/// Renders every recognized artifact in `dir` to CSV and aligned text.
/// Throws DataError when nothing is recognized or a file is corrupt.
std::vector<RenderedFile> render_reports(const std::string& dir);

/// render_reports + atomic writes into `out_dir`; returns written names.
std::vector<std::string> report(const std::string& dir, const std::string& out_dir);

std::string format_number(double v);

}  // namespace norin
