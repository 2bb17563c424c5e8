#include "norin/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "norin/errors.hpp"
#include "norin/rng.hpp"

namespace norin {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_real(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

void MultiSeries::validate() const {
    if (values.rows < 1 || values.cols < 1) throw DataError("series must have at least one step and one channel");
    if (channel_names.size() != values.cols) throw DataError("channel_names size does not match channel count");
    std::set<std::string> seen(channel_names.begin(), channel_names.end());
    if (seen.size() != channel_names.size()) throw DataError("channel names must be distinct");
    if (!timestamps.empty() && timestamps.size() != values.rows) throw DataError("timestamps size does not match length");
    for (double v : values.data)
        if (!std::isfinite(v)) throw DataError("series contains non-finite values");
}

std::vector<double> MultiSeries::channel(std::size_t c) const {
    std::vector<double> out(values.rows);
    for (std::size_t t = 0; t < values.rows; ++t) out[t] = values(t, c);
    return out;
}

const char* to_string(Part p) {
    switch (p) {
        case Part::Train: return "train";
        case Part::Val: return "val";
        case Part::Test: return "test";
    }
    return "?";
}

void SplitSpec::validate() const {
    for (double f : {train_frac, val_frac, test_frac})
        if (!(f > 0.0 && f < 1.0)) throw DataError("split fractions must lie in (0, 1)");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw DataError("split fractions must sum to 1");
}

std::pair<std::size_t, std::size_t> SplitSpec::range(std::size_t L, Part part) const {
    validate();
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(L) * train_frac));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(L) * val_frac));
    switch (part) {
        case Part::Train: return {0, n_train};
        case Part::Val: return {n_train, n_train + n_val};
        case Part::Test: return {n_train + n_val, L};
    }
    return {0, 0};
}

MultiSeries ingest_csv(const std::string& path, const std::optional<std::string>& timestamp_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": fewer than 2 rows");
    std::vector<std::string> header = split_fields(line);
    for (auto& h : header) h = trim(h);

    std::optional<std::size_t> ts_index;
    if (timestamp_column) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == *timestamp_column) ts_index = i;
    }

    MultiSeries series;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != ts_index) series.channel_names.push_back(header[i]);
    const std::size_t C = series.channel_names.size();
    if (C == 0) throw DataError(path + ": no value columns");

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << path << ": row " << row << " has " << fields.size() << " fields, expected " << header.size();
            throw DataError(msg.str());
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string cell = trim(fields[i]);
            if (i == ts_index) {
                series.timestamps.push_back(cell);
                continue;
            }
            double v = 0.0;
            if (!parse_real(cell, v)) {
                std::ostringstream msg;
                msg << path << ": non-numeric cell '" << cell << "' at row " << row << ", column " << header[i];
                throw DataError(msg.str());
            }
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << path << ": non-finite cell '" << cell << "' at row " << row << ", column " << header[i];
                throw DataError(msg.str());
            }
            values.push_back(v);
        }
    }
    if (row == 0) throw DataError(path + ": fewer than 2 rows");

    series.values.rows = row;
    series.values.cols = C;
    series.values.data = std::move(values);
    series.validate();
    return series;
}

WindowBatch make_windows(const MultiSeries& series, const SplitSpec& split, Part part, std::size_t T, std::size_t H) {
    if (T == 0 || H == 0) throw DataError("lookback and horizon must be positive");
    const auto [begin, end] = split.range(series.length(), part);
    const std::size_t len = end - begin;
    if (len < T + H) {
        std::ostringstream msg;
        msg << to_string(part) << " split has " << len << " steps, need at least T + H = " << T + H;
        throw DataError(msg.str());
    }
    const std::size_t N = len - T - H + 1;
    const std::size_t C = series.channels();
    WindowBatch batch{Array3(N, T, C), Array3(N, H, C), T, H};
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t start = begin + i;
        for (std::size_t j = 0; j < T; ++j)
            for (std::size_t c = 0; c < C; ++c) batch.lookbacks(i, j, c) = series.values(start + j, c);
        for (std::size_t j = 0; j < H; ++j)
            for (std::size_t c = 0; c < C; ++c) batch.horizons(i, j, c) = series.values(start + T + j, c);
    }
    return batch;
}

void SynthParams::validate(std::size_t C) const {
    if (!(delta > 0.0) || !(scale > 0.0)) throw DataError("generator delta and scale must be positive");
    if (!channel_delta.empty() && channel_delta.size() != C) throw DataError("channel_delta must have C entries");
    if (!channel_epsilon.empty() && channel_epsilon.size() != C) throw DataError("channel_epsilon must have C entries");
    for (double d : channel_delta)
        if (!(d > 0.0)) throw DataError("generator delta must be positive");
    if (!(season_period > 0.0)) throw DataError("season period must be positive");
}

MultiSeries synth_heavy_tailed(std::uint64_t seed, std::size_t L, std::size_t C, const SynthParams& params) {
    if (L < 1 || C < 1) throw DataError("synthetic series needs L >= 1 and C >= 1");
    params.validate(C);

    MultiSeries series;
    series.values = Matrix(L, C);
    for (std::size_t c = 0; c < C; ++c) series.channel_names.push_back("ch" + std::to_string(c));

    for (std::size_t c = 0; c < C; ++c) {
        Rng rng(mix_seed(seed, c));
        const double d = params.delta_for(c);
        const double e = params.epsilon_for(c);
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(C);
        for (std::size_t t = 0; t < L; ++t) {
            const double time = static_cast<double>(t);
            const double noise = params.loc + params.scale * std::sinh((rng.normal() - e) / d);
            const double season =
                params.season_amplitude * std::sin(2.0 * std::numbers::pi * time / params.season_period + phase);
            series.values(t, c) = params.trend * time + season + noise;
        }
    }
    return series;
}

double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DataError("mse: shape mismatch");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double mae(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) throw DataError("mae: shape mismatch");
    if (pred.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
    return acc / static_cast<double>(pred.size());
}

MomentSummary moments(std::span<const double> sample) {
    if (sample.size() < 2) throw DataError("moments: need at least 2 values");
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    // mean kept as mean + lo so a large offset does not leak into the deviations
    double lo = 0.0;
    for (double v : sample) lo += v - mean;
    lo /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sample) {
        const double d = (v - mean) - lo;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    MomentSummary out{mean + lo, m2, std::nullopt, std::nullopt};
    if (m2 > 0.0) {
        out.skewness = m3 / std::pow(m2, 1.5);
        out.kurtosis = m4 / (m2 * m2);
    }
    return out;
}

}  // namespace norin
