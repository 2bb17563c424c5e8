#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "norin/errors.hpp"
#include "norin/normalizers.hpp"
#include "norin/rng.hpp"
#include "norin/shape_fit.hpp"

using namespace norin;

namespace {

std::vector<double> jsu_sample(std::uint64_t seed, std::size_t n, double d, double e, double lam = 0.0, double xi = 1.0) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (double& v : x) v = lam + xi * std::sinh((rng.normal() - e) / d);
    return x;
}

double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("empirical_quantile examples") {
    const std::vector<double> a{10, 0};
    CHECK(empirical_quantile(a, 0.5) == 5.0);
    const std::vector<double> b{5, 3, 1, 2, 4};
    CHECK(empirical_quantile(b, 0.25) == 2.0);
    // endpoints are the limits of the interpolation formula
    CHECK(empirical_quantile(b, 1e-12) == doctest::Approx(1.0));
    CHECK(empirical_quantile(b, 1 - 1e-12) == doctest::Approx(5.0));
    CHECK_THROWS_AS(empirical_quantile(b, 0.0), DataError);
    CHECK_THROWS_AS(empirical_quantile(b, 1.0), DataError);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(empirical_quantile(one, 0.5), DataError);
}

TEST_CASE("normal_cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(0.524) == doctest::Approx(0.69985).epsilon(1e-4));
    CHECK(normal_cdf(-1.572) == doctest::Approx(0.05797).epsilon(1e-3));
}

TEST_CASE("fit recovers a JSU(2, -0.5) shape") {
    const auto x = jsu_sample(123, 100000, 2.0, -0.5);
    const auto f = slifker_shapiro_fit(x);
    CHECK(f.family == JohnsonFamily::SU);
    CHECK(f.has_shape);
    CHECK(std::abs(f.delta - 2.0) <= 0.2);
    CHECK(std::abs(f.epsilon + 0.5) <= 0.1);
    CHECK(f.z_used == kDefaultProbeZ);
}

TEST_CASE("uniform sample is classified SB, matching exact uniform quantiles") {
    Rng rng(4);
    std::vector<double> x(100000);
    for (double& v : x) v = rng.uniform();
    const auto f = slifker_shapiro_fit(x);
    CHECK(f.family == JohnsonFamily::SB);
    CHECK(!f.has_shape);
    // exact uniform quantiles are the probabilities themselves
    const double z = kDefaultProbeZ;
    const double m = phi(3 * z) - phi(z), n = phi(-z) - phi(-3 * z), p = phi(z) - phi(-z);
    const double ratio = m * n / (p * p);
    CHECK(ratio == doctest::Approx(0.367).epsilon(0.01));
    CHECK(std::abs(f.ratio - ratio) < 0.01);
}

TEST_CASE("symmetric SU sample gives epsilon exactly zero") {
    // mirrored heavy-tailed sample: m == n exactly
    auto half = jsu_sample(9, 500, 1.2, 0.0);
    std::vector<double> x;
    for (double v : half) {
        x.push_back(std::abs(v) + 0.01);
        x.push_back(-(std::abs(v) + 0.01));
    }
    const auto f = slifker_shapiro_fit(x);
    REQUIRE(f.family == JohnsonFamily::SU);
    CHECK(f.quad.m == doctest::Approx(f.quad.n).epsilon(1e-14));
    CHECK(std::abs(f.epsilon) <= 1e-12);
}

TEST_CASE("fit preconditions and degenerate inputs") {
    std::vector<double> small(19, 1.0);
    CHECK_THROWS_AS(slifker_shapiro_fit(small), DataError);
    const auto x = jsu_sample(1, 100, 1, 0);
    CHECK_THROWS_AS(slifker_shapiro_fit(x, 0.0), DataError);
    CHECK_THROWS_AS(slifker_shapiro_fit(x, 1.3), DataError);
    CHECK_NOTHROW(slifker_shapiro_fit(x, 1.2));
    std::vector<double> flat(100, 3.0);
    CHECK_THROWS_AS(slifker_shapiro_fit(flat), DataError);
}

TEST_CASE("quantile quad ordering") {
    const auto x = jsu_sample(77, 5000, 1.0, 0.8);
    const auto q = quantile_quad(x, kDefaultProbeZ);
    CHECK(q.x_m3z <= q.x_m1z);
    CHECK(q.x_m1z <= q.x_p1z);
    CHECK(q.x_p1z <= q.x_p3z);
    CHECK(q.m >= 0);
    CHECK(q.n >= 0);
    CHECK(q.p > 0);
}

TEST_CASE("property: location-scale equivariance") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = jsu_sample(1000 + trial, 200 + rng.below(2000), rng.uniform(0.7, 3), rng.uniform(-1, 1));
        const double a = std::exp(rng.uniform(-3, 3)), b = rng.uniform(-20, 20);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto fx = slifker_shapiro_fit(x), fy = slifker_shapiro_fit(y);
        CHECK(fx.family == fy.family);
        if (fx.family != JohnsonFamily::SU || fy.family != JohnsonFamily::SU) continue;
        CHECK(std::abs(fx.delta - fy.delta) <= 1e-9);
        CHECK(std::abs(fx.epsilon - fy.epsilon) <= 1e-9);
        CHECK(std::abs(fy.loc_fit - (a * fx.loc_fit + b)) <= 1e-9 * std::max(1.0, std::abs(fy.loc_fit)));
        CHECK(std::abs(fy.scale_fit - a * fx.scale_fit) <= 1e-9 * std::max(1.0, fy.scale_fit));
    }
}

TEST_CASE("fit-transform consistency") {
    const auto x = jsu_sample(2718, 200000, 1.4, 0.6, 3.0, 2.0);
    const auto f = slifker_shapiro_fit(x);
    REQUIRE(f.family == JohnsonFamily::SU);
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        z[i] = jsu_forward_scalar(x[i], f.delta, f.epsilon, f.loc_fit, f.scale_fit);
    const auto m = moments(z);
    CHECK(std::abs(*m.skewness) <= 0.05);
    CHECK(std::abs(*m.kurtosis - 3.0) <= 0.15);
}

TEST_CASE("fit is deterministic") {
    const auto x = jsu_sample(31, 3000, 1.1, 0.2);
    CHECK(slifker_shapiro_fit(x) == slifker_shapiro_fit(x));
}

namespace {

MultiSeries noise_series(std::uint64_t seed, std::size_t L, std::size_t C, double d, double e,
                         std::vector<double> scales = {}) {
    MultiSeries s;
    s.values = Matrix(L, C);
    for (std::size_t c = 0; c < C; ++c) {
        Rng rng(mix_seed(seed, c));
        const double sc = scales.empty() ? 1.0 : scales[c];
        for (std::size_t t = 0; t < L; ++t) s.values(t, c) = 10.0 * c + sc * std::sinh((rng.normal() - e) / d);
        s.channel_names.push_back("c" + std::to_string(c));
    }
    return s;
}

}  // namespace

TEST_CASE("warm_start on standard-normal channels lands at the near-linear boundary") {
    // Finite samples put the ratio near 1, on either side; both outcomes mean "no usable heavy tail":
    // either the (1, 0) fallback, or an SU fit so close to linear that delta exceeds the box.
    MultiSeries s;
    s.values = Matrix(20000, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        Rng rng(mix_seed(5, c));
        for (std::size_t t = 0; t < 20000; ++t) s.values(t, c) = rng.normal();
        s.channel_names.push_back("n" + std::to_string(c));
    }
    const auto r = warm_start(s, SplitSpec{}, ShapeMode::PerChannel);
    REQUIRE(r.reports.size() == 3);
    for (const auto& rep : r.reports) {
        const bool near_linear = rep.fit.has_shape && rep.fit.delta >= ShapeBox{}.delta_hi;
        CHECK((rep.fallback || near_linear));
        CHECK(std::abs(rep.fit.ratio - 1.0) < 0.05);
    }
}

TEST_CASE("warm_start shared mode recovers a dominating JSU(2, -0.5) noise") {
    const auto s = noise_series(3, 150000, 3, 2.0, -0.5, {1.0, 50.0, 0.01});
    const auto r = warm_start(s, SplitSpec{}, ShapeMode::Shared);
    CHECK(r.mode == ShapeMode::Shared);
    REQUIRE(r.reports.size() == 1);
    CHECK(!r.reports[0].fallback);
    CHECK(r.shape.shared);
    REQUIRE(r.shape.delta.size() == 3);
    CHECK(std::abs(r.shape.delta[0] - 2.0) <= 0.2);
    CHECK(std::abs(r.shape.epsilon[0] + 0.5) <= 0.1);
    CHECK(r.shape.delta[0] == r.shape.delta[2]);
}

TEST_CASE("warm_start per-channel mode and clamping") {
    auto s = noise_series(11, 60000, 2, 2.0, -0.5);
    // second channel: JSU(1, -1.5), epsilon below the box
    Rng rng(8);
    for (std::size_t t = 0; t < s.length(); ++t) s.values(t, 1) = std::sinh(rng.normal() + 1.5);
    const auto r = warm_start(s, SplitSpec{}, ShapeMode::PerChannel);
    REQUIRE(r.reports.size() == 2);
    CHECK(!r.shape.shared);
    CHECK(std::abs(r.shape.delta[0] - 2.0) <= 0.2);
    CHECK(!r.reports[0].clamped);
    CHECK(r.reports[1].clamped);
    CHECK(r.shape.epsilon[1] == -1.0);
    CHECK(r.reports[1].fit.epsilon < -1.0);
    const auto j = fit_report_json(r);
    CHECK(j.contains("shape"));
}

TEST_CASE("warm_start falls back on a bounded channel and on an empty train split") {
    MultiSeries s;
    s.values = Matrix(5000, 1);
    Rng rng(2);
    for (std::size_t t = 0; t < 5000; ++t) s.values(t, 0) = rng.uniform();
    s.channel_names = {"u"};
    const auto r = warm_start(s, SplitSpec{}, ShapeMode::PerChannel);
    CHECK(r.reports[0].fallback);
    CHECK(r.reports[0].fit.family == JohnsonFamily::SB);
    CHECK(r.shape.delta[0] == 1.0);
    CHECK(r.shape.epsilon[0] == 0.0);

    MultiSeries tiny;
    tiny.values = Matrix(1, 1, 1.0);
    tiny.channel_names = {"x"};
    CHECK_THROWS_AS(warm_start(tiny, SplitSpec{}, ShapeMode::Shared), DataError);
}
