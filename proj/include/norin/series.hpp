#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "norin/array.hpp"

namespace norin {

/// A multichannel series of L time steps and C channels.
struct MultiSeries {
    Matrix values;  // (L, C)
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // empty or L entries

    std::size_t length() const { return values.rows; }
    std::size_t channels() const { return values.cols; }

    /// Throws DataError unless L >= 1, C >= 1, names are distinct and values finite.
    void validate() const;

    std::vector<double> channel(std::size_t c) const;
};

enum class Part { Train, Val, Test };

const char* to_string(Part p);

/// Chronological ratio split of the time axis.
struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;

    void validate() const;

    /// Half-open [begin, end) time range of `part` for a series of length L.
    /// Train and val lengths are floor(L * frac); test takes the remainder.
    std::pair<std::size_t, std::size_t> range(std::size_t L, Part part) const;
};

/// Stride-1 (lookback, horizon) pairs sliced from one split.
struct WindowBatch {
    Array3 lookbacks;  // (N, T, C)
    Array3 horizons;   // (N, H, C)
    std::size_t T = 0;
    std::size_t H = 0;

    std::size_t size() const { return lookbacks.n; }
    std::size_t channels() const { return lookbacks.c; }
};

/// Population moments; skewness and kurtosis are empty when the variance is zero.
struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;
    std::optional<double> skewness;
    std::optional<double> kurtosis;
};

/// Reads a comma-separated file with a header row. The column named
/// `timestamp_column` (when present) is kept as opaque strings; every other
/// column must parse as a finite real.
MultiSeries ingest_csv(const std::string& path, const std::optional<std::string>& timestamp_column = "date");

WindowBatch make_windows(const MultiSeries& series, const SplitSpec& split, Part part, std::size_t T, std::size_t H);

/// Generator settings for the heavy-tailed synthetic benchmark. The noise of
/// every channel is lambda + xi * sinh((Z - epsilon) / delta) with Z standard
/// normal, i.e. Johnson S_U distributed with known shape.
struct SynthParams {
    double delta = 1.0;
    double epsilon = 0.0;
    double loc = 0.0;
    double scale = 1.0;
    double trend = 0.0;              // per-step slope
    double season_amplitude = 0.0;
    double season_period = 24.0;
    /// Optional per-channel overrides; empty means the scalar value above for every channel.
    std::vector<double> channel_delta;
    std::vector<double> channel_epsilon;

    void validate(std::size_t C) const;
    double delta_for(std::size_t c) const { return channel_delta.empty() ? delta : channel_delta[c]; }
    double epsilon_for(std::size_t c) const { return channel_epsilon.empty() ? epsilon : channel_epsilon[c]; }
};

MultiSeries synth_heavy_tailed(std::uint64_t seed, std::size_t L, std::size_t C, const SynthParams& params);

/// Mean squared / absolute error over all elements. Throws on size mismatch.
double mse(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);

MomentSummary moments(std::span<const double> sample);

}  // namespace norin
