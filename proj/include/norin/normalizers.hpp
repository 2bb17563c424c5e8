#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "norin/array.hpp"

namespace norin {

/// Johnson S_U shape pair (delta, epsilon), one entry per channel.
/// delta controls tail weight (delta -> infinity is the affine limit),
/// epsilon controls skewness.
struct ShapeParams {
    std::vector<double> delta;
    std::vector<double> epsilon;
    bool shared = true;
    std::vector<std::string> channels;  // optional labels

    static ShapeParams shared_pair(std::size_t C, double delta, double epsilon);

    std::size_t channels_count() const { return delta.size(); }

    /// Throws DataError on size mismatch, non-positive delta, or unequal entries in shared mode.
    void validate() const;

    bool operator==(const ShapeParams&) const = default;
};

nlohmann::json to_json(const ShapeParams& shape);
ShapeParams shape_from_json(const nlohmann::json& j);

enum class StatsKind { RobustMedianMad, MeanStd };

/// Per-window, per-channel location/scale computed from the lookback only.
struct InstanceStats {
    Matrix loc;    // (N, C)
    Matrix scale;  // (N, C), strictly positive
    std::vector<std::uint8_t> degenerate;  // (N * C), 1 where the scale floor fired
    StatsKind kind = StatsKind::RobustMedianMad;

    std::size_t windows() const { return loc.rows; }
    std::size_t channels() const { return loc.cols; }
    bool is_degenerate(std::size_t i, std::size_t c) const { return degenerate[i * loc.cols + c] != 0; }
};

/// RevIN's post-normalization affine; disabled means gamma = 1, beta = 0.
struct AffinePost {
    std::vector<double> gamma;
    std::vector<double> beta;
    bool enabled = false;

    static AffinePost identity(std::size_t C, bool enabled = false);
    double g(std::size_t c) const { return enabled ? gamma[c] : 1.0; }
    double b(std::size_t c) const { return enabled ? beta[c] : 0.0; }
};

inline constexpr double kScaleFloor = 1e-8;

/// Median of the lookback per window/channel and the raw median absolute
/// deviation from it. Scales below kScaleFloor become 1.0 and are flagged.
InstanceStats robust_loc_scale(const Array3& lookbacks);

/// Mean and population standard deviation, with the same floor rule.
InstanceStats mean_std_stats(const Array3& lookbacks);

/// Median of a sample; even lengths use the midpoint of the central pair.
double median(std::vector<double> values);

// Scalar kernels. `u` is the standardized input (x - loc) / scale.

inline double jsu_forward_scalar(double x, double delta, double epsilon, double loc, double scale) {
    return epsilon + delta * std::asinh((x - loc) / scale);
}

inline double jsu_inverse_scalar(double z, double delta, double epsilon, double loc, double scale) {
    return loc + scale * std::sinh((z - epsilon) / delta);
}

/// Partials of z = eps + delta * asinh((x - loc) / scale).
struct JsuForwardPartials {
    double d_delta;
    double d_epsilon;
    double d_x;
};

/// Partials of x = loc + scale * sinh((z - eps) / delta).
struct JsuInversePartials {
    double d_delta;
    double d_epsilon;
    double d_z;
};

inline JsuForwardPartials jsu_forward_partials(double x, double delta, double loc, double scale) {
    const double u = (x - loc) / scale;
    return {std::asinh(u), 1.0, delta / (scale * std::sqrt(u * u + 1.0))};
}

inline JsuInversePartials jsu_inverse_partials(double z, double delta, double epsilon, double scale) {
    const double w = (z - epsilon) / delta;
    const double ch = std::cosh(w);
    return {-scale * ch * (z - epsilon) / (delta * delta), -scale * ch / delta, scale * ch / delta};
}

/// Elementwise z = eps_c + delta_c * asinh((x - loc) / scale). `x` is (N, *, C)
/// with N matching the stats rows.
Array3 jsu_forward(const Array3& x, const InstanceStats& stats, const ShapeParams& shape);

/// Elementwise x = loc + scale * sinh((z - eps_c) / delta_c).
Array3 jsu_inverse(const Array3& z, const InstanceStats& stats, const ShapeParams& shape);

/// z = gamma_c * (x - mu) / sigma + beta_c.
Array3 revin_forward(const Array3& x, const InstanceStats& stats, const AffinePost& post);
Array3 revin_inverse(const Array3& z, const InstanceStats& stats, const AffinePost& post);

struct JsuForwardGrads {
    Array3 d_delta;
    Array3 d_epsilon;
    Array3 d_x;
};

struct JsuInverseGrads {
    Array3 d_delta;
    Array3 d_epsilon;
    Array3 d_z;
};

/// Elementwise partial derivatives of the forward map, evaluated at `x`.
JsuForwardGrads jsu_forward_grads(const Array3& x, const InstanceStats& stats, const ShapeParams& shape);

/// Elementwise partial derivatives of the inverse map, evaluated at `z`.
JsuInverseGrads jsu_inverse_grads(const Array3& z, const InstanceStats& stats, const ShapeParams& shape);

enum class NormalizerKind { None, RevIN, NoRIN };

const char* to_string(NormalizerKind kind);
NormalizerKind normalizer_from_string(const std::string& name);

}  // namespace norin
