#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/normalizers.hpp"
#include "norin/series.hpp"

namespace norin {

/// Closed box for the shape search; the warm start is clamped into it.
struct ShapeBox {
    double delta_lo = 0.8;
    double delta_hi = 5.0;
    double eps_lo = -1.0;
    double eps_hi = 1.0;

    void validate() const;
};

/// The four probe quantiles of the Slifker-Shapiro construction and their spreads.
struct QuantileQuad {
    double x_m3z = 0.0;
    double x_m1z = 0.0;
    double x_p1z = 0.0;
    double x_p3z = 0.0;
    double m = 0.0;  // x_p3z - x_p1z
    double n = 0.0;  // x_m1z - x_m3z
    double p = 0.0;  // x_p1z - x_m1z

    bool operator==(const QuantileQuad&) const = default;
};

enum class JohnsonFamily { SU, SB, SL };

const char* to_string(JohnsonFamily f);

struct FitResult {
    JohnsonFamily family = JohnsonFamily::SL;
    bool has_shape = false;  // true iff family == SU and the SU branch was well-defined
    double delta = 1.0;      // unclamped estimate (fallback 1 when !has_shape)
    double epsilon = 0.0;    // unclamped estimate (fallback 0 when !has_shape)
    double loc_fit = 0.0;    // diagnostic only
    double scale_fit = 0.0;  // diagnostic only
    double ratio = 0.0;      // m n / p^2
    double z_used = 0.0;
    bool degenerate = false;  // SU classified but m/p + n/p <= 2
    QuantileQuad quad;

    bool operator==(const FitResult&) const = default;
};

inline constexpr double kDefaultProbeZ = 0.524;
inline constexpr double kFamilyTolerance = 1e-6;

/// Linear interpolation between order statistics at position (n-1)q + 1.
double empirical_quantile(std::span<const double> sample, double q);

/// Same as empirical_quantile on an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

double normal_cdf(double x);

QuantileQuad quantile_quad(std::span<const double> sample, double z);

/// Closed-form quantile fit of a Johnson curve. Classifies the sample into
/// S_U / S_B / S_L by the ratio m n / p^2 and, for S_U, returns the shape
/// pair together with the fitted location and scale.
FitResult slifker_shapiro_fit(std::span<const double> sample, double z = kDefaultProbeZ);

enum class ShapeMode { Shared, PerChannel };

ShapeMode shape_mode_from_string(const std::string& s);
const char* to_string(ShapeMode m);

struct ChannelFitReport {
    std::string channel;
    FitResult fit;
    bool fallback = false;  // (1, 0) substituted
    bool clamped = false;   // estimate moved into the box
};

struct WarmStartResult {
    ShapeParams shape;  // clamped into the box
    std::vector<ChannelFitReport> reports;  // one per channel, or a single pooled entry in shared mode
    ShapeMode mode = ShapeMode::Shared;
};

/// Training-free shape estimate from the train split. Per-channel mode fits
/// each channel's raw train values; shared mode pools the channels after
/// centering each by its median and scaling by its MAD. Fits that are not
/// S_U fall back to (1, 0) and are flagged.
WarmStartResult warm_start(const MultiSeries& series, const SplitSpec& split, ShapeMode mode, double z = kDefaultProbeZ,
                           const ShapeBox& box = {});

nlohmann::json fit_report_json(const WarmStartResult& result);

}  // namespace norin
