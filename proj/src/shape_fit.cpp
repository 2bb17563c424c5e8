#include "norin/shape_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "norin/errors.hpp"

namespace norin {

void ShapeBox::validate() const {
    if (!(delta_lo < delta_hi) || !(eps_lo < eps_hi)) throw DataError("search box bounds must satisfy lo < hi");
    if (!(delta_lo > 0.0)) throw DataError("search box delta lower bound must be positive");
}

const char* to_string(JohnsonFamily f) {
    switch (f) {
        case JohnsonFamily::SU: return "SU";
        case JohnsonFamily::SB: return "SB";
        case JohnsonFamily::SL: return "SL";
    }
    return "?";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double sorted_quantile(std::span<const double> s, double q) {
    if (!(q > 0.0 && q < 1.0)) throw DataError("quantile probability must lie in (0, 1)");
    if (s.size() < 2) throw DataError("quantile needs at least 2 values");
    // 1-based position h = (n - 1) q + 1
    const double h = static_cast<double>(s.size() - 1) * q + 1.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo >= s.size()) return s.back();
    return s[lo - 1] + frac * (s[lo] - s[lo - 1]);
}

double empirical_quantile(std::span<const double> sample, double q) {
    std::vector<double> sorted(sample.begin(), sample.end());
    for (double v : sorted)
        if (!std::isfinite(v)) throw DataError("quantile sample contains non-finite values");
    std::sort(sorted.begin(), sorted.end());
    return sorted_quantile(sorted, q);
}

QuantileQuad quantile_quad(std::span<const double> sample, double z) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    QuantileQuad quad;
    quad.x_m3z = sorted_quantile(sorted, normal_cdf(-3.0 * z));
    quad.x_m1z = sorted_quantile(sorted, normal_cdf(-z));
    quad.x_p1z = sorted_quantile(sorted, normal_cdf(z));
    quad.x_p3z = sorted_quantile(sorted, normal_cdf(3.0 * z));
    quad.m = quad.x_p3z - quad.x_p1z;
    quad.n = quad.x_m1z - quad.x_m3z;
    quad.p = quad.x_p1z - quad.x_m1z;
    return quad;
}

FitResult slifker_shapiro_fit(std::span<const double> sample, double z) {
    if (sample.size() < 20) throw DataError("Johnson fit needs at least 20 values");
    if (!(z > 0.0 && z <= 1.2)) throw DataError("probe z must lie in (0, 1.2]");
    for (double v : sample)
        if (!std::isfinite(v)) throw DataError("Johnson fit sample contains non-finite values");

    FitResult fit;
    fit.z_used = z;
    fit.quad = quantile_quad(sample, z);
    const auto& q = fit.quad;
    if (!(q.p > 0.0)) throw DataError("Johnson fit: inner quantiles coincide (p <= 0)");

    const double mp = q.m / q.p;
    const double np = q.n / q.p;
    fit.ratio = mp * np;

    if (fit.ratio > 1.0 + kFamilyTolerance) {
        fit.family = JohnsonFamily::SU;
        const double sum = mp + np;
        if (!(sum > 2.0)) {
            fit.degenerate = true;
            return fit;
        }
        const double root = std::sqrt(fit.ratio - 1.0);
        fit.delta = 2.0 * z / std::acosh(sum / 2.0);
        fit.epsilon = fit.delta * std::asinh((np - mp) / (2.0 * root));
        fit.scale_fit = 2.0 * q.p * root / ((sum - 2.0) * std::sqrt(sum + 2.0));
        fit.loc_fit = (q.x_p1z + q.x_m1z) / 2.0 + q.p * (np - mp) / (2.0 * (sum - 2.0));
        fit.has_shape = true;
    } else if (fit.ratio < 1.0 - kFamilyTolerance) {
        fit.family = JohnsonFamily::SB;
    } else {
        fit.family = JohnsonFamily::SL;
    }
    return fit;
}

ShapeMode shape_mode_from_string(const std::string& s) {
    if (s == "shared") return ShapeMode::Shared;
    if (s == "per-channel") return ShapeMode::PerChannel;
    throw DataError("unknown shape mode: " + s);
}

const char* to_string(ShapeMode m) { return m == ShapeMode::Shared ? "shared" : "per-channel"; }

namespace {

ChannelFitReport fit_channel(const std::string& name, std::span<const double> sample, double z, const ShapeBox& box,
                             double& delta, double& epsilon) {
    ChannelFitReport report;
    report.channel = name;
    try {
        report.fit = slifker_shapiro_fit(sample, z);
    } catch (const DataError&) {
        // p <= 0: nothing usable between the inner quantiles
        report.fit = FitResult{};
        report.fit.z_used = z;
        report.fit.degenerate = true;
    }
    if (report.fit.has_shape) {
        delta = std::clamp(report.fit.delta, box.delta_lo, box.delta_hi);
        epsilon = std::clamp(report.fit.epsilon, box.eps_lo, box.eps_hi);
        report.clamped = delta != report.fit.delta || epsilon != report.fit.epsilon;
    } else {
        delta = std::clamp(1.0, box.delta_lo, box.delta_hi);
        epsilon = std::clamp(0.0, box.eps_lo, box.eps_hi);
        report.fallback = true;
    }
    return report;
}

}  // namespace

WarmStartResult warm_start(const MultiSeries& series, const SplitSpec& split, ShapeMode mode, double z,
                           const ShapeBox& box) {
    box.validate();
    const auto [begin, end] = split.range(series.length(), Part::Train);
    if (end <= begin) throw DataError("train split is empty");
    const std::size_t C = series.channels();

    WarmStartResult result;
    result.mode = mode;
    result.shape.channels = series.channel_names;
    result.shape.shared = mode == ShapeMode::Shared;

    auto train_values = [&, begin = begin, end = end](std::size_t c) {
        std::vector<double> v;
        v.reserve(end - begin);
        for (std::size_t t = begin; t < end; ++t) v.push_back(series.values(t, c));
        return v;
    };

    if (mode == ShapeMode::PerChannel) {
        for (std::size_t c = 0; c < C; ++c) {
            double d = 1.0, e = 0.0;
            const auto values = train_values(c);
            result.reports.push_back(fit_channel(series.channel_names[c], values, z, box, d, e));
            result.shape.delta.push_back(d);
            result.shape.epsilon.push_back(e);
        }
        return result;
    }

    std::vector<double> pooled;
    pooled.reserve((end - begin) * C);
    for (std::size_t c = 0; c < C; ++c) {
        auto values = train_values(c);
        const double loc = median(values);
        std::vector<double> dev(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - loc);
        double scale = median(std::move(dev));
        if (!(scale >= kScaleFloor)) scale = 1.0;
        for (double v : values) pooled.push_back((v - loc) / scale);
    }
    double d = 1.0, e = 0.0;
    result.reports.push_back(fit_channel("pooled", pooled, z, box, d, e));
    result.shape.delta.assign(C, d);
    result.shape.epsilon.assign(C, e);
    return result;
}

nlohmann::json fit_report_json(const WarmStartResult& result) {
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& r : result.reports) {
        channels.push_back({{"channel", r.channel},
                            {"family", to_string(r.fit.family)},
                            {"ratio", r.fit.ratio},
                            {"z_used", r.fit.z_used},
                            {"delta_raw", r.fit.delta},
                            {"epsilon_raw", r.fit.epsilon},
                            {"loc_fit", r.fit.loc_fit},
                            {"scale_fit", r.fit.scale_fit},
                            {"degenerate", r.fit.degenerate},
                            {"fallback", r.fallback},
                            {"clamped", r.clamped}});
    }
    return {{"mode", to_string(result.mode)}, {"shape", to_json(result.shape)}, {"fits", channels}};
}

}  // namespace norin
