#include "norin/normalizers.hpp"

#include <algorithm>

#include "norin/errors.hpp"

namespace norin {

ShapeParams ShapeParams::shared_pair(std::size_t C, double delta, double epsilon) {
    ShapeParams s;
    s.delta.assign(C, delta);
    s.epsilon.assign(C, epsilon);
    s.shared = true;
    return s;
}

void ShapeParams::validate() const {
    if (delta.empty()) throw DataError("shape parameters need at least one channel");
    if (epsilon.size() != delta.size()) throw DataError("delta and epsilon must have the same length");
    if (!channels.empty() && channels.size() != delta.size()) throw DataError("channel labels do not match shape size");
    for (double d : delta)
        if (!(d > 0.0) || !std::isfinite(d)) throw DataError("shape delta must be positive and finite");
    for (double e : epsilon)
        if (!std::isfinite(e)) throw DataError("shape epsilon must be finite");
    if (shared) {
        for (std::size_t c = 1; c < delta.size(); ++c)
            if (delta[c] != delta[0] || epsilon[c] != epsilon[0])
                throw DataError("shared shape parameters must be equal across channels");
    }
}

nlohmann::json to_json(const ShapeParams& shape) {
    return nlohmann::json{{"shared", shape.shared},
                          {"delta", shape.delta},
                          {"epsilon", shape.epsilon},
                          {"channels", shape.channels}};
}

ShapeParams shape_from_json(const nlohmann::json& j) {
    ShapeParams s;
    try {
        s.shared = j.value("shared", true);
        s.delta = j.at("delta").get<std::vector<double>>();
        s.epsilon = j.at("epsilon").get<std::vector<double>>();
        if (j.contains("channels")) s.channels = j.at("channels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed shape document: ") + e.what());
    }
    s.validate();
    return s;
}

double median(std::vector<double> values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return lower + (upper - lower) / 2.0;
}

namespace {

void check_lookbacks(const Array3& lookbacks) {
    if (lookbacks.t < 1) throw DataError("lookback length must be at least 1");
    for (double v : lookbacks.data)
        if (!std::isfinite(v)) throw DataError("lookbacks contain non-finite values");
}

template <class LocScale>
InstanceStats compute_stats(const Array3& lookbacks, StatsKind kind, LocScale&& loc_scale) {
    check_lookbacks(lookbacks);
    const std::size_t N = lookbacks.n, T = lookbacks.t, C = lookbacks.c;
    InstanceStats stats{Matrix(N, C), Matrix(N, C), std::vector<std::uint8_t>(N * C, 0), kind};
    std::vector<double> col(T);
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t t = 0; t < T; ++t) col[t] = lookbacks(i, t, c);
            auto [loc, scale] = loc_scale(col);
            if (!(scale >= kScaleFloor)) {
                scale = 1.0;
                stats.degenerate[i * C + c] = 1;
            }
            stats.loc(i, c) = loc;
            stats.scale(i, c) = scale;
        }
    }
    return stats;
}

void check_dims(const Array3& x, const InstanceStats& stats) {
    if (x.n != stats.windows() || x.c != stats.channels())
        throw DataError("array dimensions do not match instance statistics");
    for (double s : stats.scale.data)
        if (!(s > 0.0)) throw DataError("instance scale must be positive");
}

void check_shape(const Array3& x, const ShapeParams& shape) {
    if (shape.delta.size() != x.c || shape.epsilon.size() != x.c)
        throw DataError("shape parameters do not match channel count");
    for (double d : shape.delta)
        if (!(d > 0.0)) throw DataError("shape delta must be positive");
}

template <class Fn>
Array3 map_elements(const Array3& x, Fn&& fn) {
    Array3 out(x.n, x.t, x.c);
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t t = 0; t < x.t; ++t)
            for (std::size_t c = 0; c < x.c; ++c) out(i, t, c) = fn(x(i, t, c), i, c);
    return out;
}

}  // namespace

InstanceStats robust_loc_scale(const Array3& lookbacks) {
    return compute_stats(lookbacks, StatsKind::RobustMedianMad, [](const std::vector<double>& col) {
        const double loc = median(col);
        std::vector<double> dev(col.size());
        for (std::size_t t = 0; t < col.size(); ++t) dev[t] = std::abs(col[t] - loc);
        return std::pair{loc, median(std::move(dev))};
    });
}

InstanceStats mean_std_stats(const Array3& lookbacks) {
    return compute_stats(lookbacks, StatsKind::MeanStd, [](const std::vector<double>& col) {
        const double n = static_cast<double>(col.size());
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        return std::pair{mean, std::sqrt(var / n)};
    });
}

AffinePost AffinePost::identity(std::size_t C, bool enabled) {
    return AffinePost{std::vector<double>(C, 1.0), std::vector<double>(C, 0.0), enabled};
}

Array3 jsu_forward(const Array3& x, const InstanceStats& stats, const ShapeParams& shape) {
    check_dims(x, stats);
    check_shape(x, shape);
    return map_elements(x, [&](double v, std::size_t i, std::size_t c) {
        return jsu_forward_scalar(v, shape.delta[c], shape.epsilon[c], stats.loc(i, c), stats.scale(i, c));
    });
}

Array3 jsu_inverse(const Array3& z, const InstanceStats& stats, const ShapeParams& shape) {
    check_dims(z, stats);
    check_shape(z, shape);
    return map_elements(z, [&](double v, std::size_t i, std::size_t c) {
        return jsu_inverse_scalar(v, shape.delta[c], shape.epsilon[c], stats.loc(i, c), stats.scale(i, c));
    });
}

namespace {

void check_post(const Array3& x, const AffinePost& post) {
    if (!post.enabled) return;
    if (post.gamma.size() != x.c || post.beta.size() != x.c) throw DataError("affine post does not match channel count");
    for (double g : post.gamma)
        if (g == 0.0) throw DataError("affine gamma must be nonzero");
}

}  // namespace

Array3 revin_forward(const Array3& x, const InstanceStats& stats, const AffinePost& post) {
    check_dims(x, stats);
    check_post(x, post);
    return map_elements(x, [&](double v, std::size_t i, std::size_t c) {
        return post.g(c) * (v - stats.loc(i, c)) / stats.scale(i, c) + post.b(c);
    });
}

Array3 revin_inverse(const Array3& z, const InstanceStats& stats, const AffinePost& post) {
    check_dims(z, stats);
    check_post(z, post);
    return map_elements(z, [&](double v, std::size_t i, std::size_t c) {
        return stats.loc(i, c) + stats.scale(i, c) * (v - post.b(c)) / post.g(c);
    });
}

JsuForwardGrads jsu_forward_grads(const Array3& x, const InstanceStats& stats, const ShapeParams& shape) {
    check_dims(x, stats);
    check_shape(x, shape);
    JsuForwardGrads g{Array3(x.n, x.t, x.c), Array3(x.n, x.t, x.c), Array3(x.n, x.t, x.c)};
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t t = 0; t < x.t; ++t)
            for (std::size_t c = 0; c < x.c; ++c) {
                const auto p = jsu_forward_partials(x(i, t, c), shape.delta[c], stats.loc(i, c), stats.scale(i, c));
                g.d_delta(i, t, c) = p.d_delta;
                g.d_epsilon(i, t, c) = p.d_epsilon;
                g.d_x(i, t, c) = p.d_x;
            }
    return g;
}

JsuInverseGrads jsu_inverse_grads(const Array3& z, const InstanceStats& stats, const ShapeParams& shape) {
    check_dims(z, stats);
    check_shape(z, shape);
    JsuInverseGrads g{Array3(z.n, z.t, z.c), Array3(z.n, z.t, z.c), Array3(z.n, z.t, z.c)};
    for (std::size_t i = 0; i < z.n; ++i)
        for (std::size_t t = 0; t < z.t; ++t)
            for (std::size_t c = 0; c < z.c; ++c) {
                const auto p = jsu_inverse_partials(z(i, t, c), shape.delta[c], shape.epsilon[c], stats.scale(i, c));
                g.d_delta(i, t, c) = p.d_delta;
                g.d_epsilon(i, t, c) = p.d_epsilon;
                g.d_z(i, t, c) = p.d_z;
            }
    return g;
}

const char* to_string(NormalizerKind kind) {
    switch (kind) {
        case NormalizerKind::None: return "none";
        case NormalizerKind::RevIN: return "revin";
        case NormalizerKind::NoRIN: return "norin";
    }
    return "?";
}

NormalizerKind normalizer_from_string(const std::string& name) {
    if (name == "none" || name == "identity") return NormalizerKind::None;
    if (name == "revin") return NormalizerKind::RevIN;
    if (name == "norin") return NormalizerKind::NoRIN;
    throw DataError("unknown normalizer: " + name);
}

}  // namespace norin
