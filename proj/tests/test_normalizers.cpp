#include <doctest.h>

#include <cmath>

#include "norin/errors.hpp"
#include "norin/normalizers.hpp"
#include "norin/rng.hpp"
#include "norin/series.hpp"
#include "oracles.hpp"

using namespace norin;

namespace {

Array3 column(std::vector<double> v) {
    Array3 a(1, v.size(), 1);
    a.data = std::move(v);
    return a;
}

InstanceStats fixed_stats(std::size_t N, std::size_t C, double loc, double scale) {
    InstanceStats s;
    s.loc = Matrix(N, C, loc);
    s.scale = Matrix(N, C, scale);
    s.degenerate.assign(N * C, 0);
    return s;
}

double fwd1(double x, double d, double e, double l, double s) {
    return jsu_forward(column({x}), fixed_stats(1, 1, l, s), ShapeParams::shared_pair(1, d, e)).data[0];
}

double inv1(double z, double d, double e, double l, double s) {
    return jsu_inverse(column({z}), fixed_stats(1, 1, l, s), ShapeParams::shared_pair(1, d, e)).data[0];
}

}  // namespace

TEST_CASE("robust_loc_scale examples") {
    SUBCASE("outlier does not move median or MAD") {
        const auto s = robust_loc_scale(column({1, 2, 3, 4, 100}));
        CHECK(s.loc(0, 0) == 3.0);
        CHECK(s.scale(0, 0) == 1.0);
        CHECK(!s.is_degenerate(0, 0));
    }
    SUBCASE("constant channel is flagged") {
        const auto s = robust_loc_scale(column({5, 5, 5, 5}));
        CHECK(s.loc(0, 0) == 5.0);
        CHECK(s.scale(0, 0) == 1.0);
        CHECK(s.is_degenerate(0, 0));
    }
    SUBCASE("even length uses the midpoint") {
        const auto s = robust_loc_scale(column({0, 10}));
        CHECK(s.loc(0, 0) == 5.0);
        CHECK(s.scale(0, 0) == 5.0);
    }
    SUBCASE("per window, per channel") {
        Array3 a(2, 3, 2);
        // window 0: ch0 = 1,2,3 ; ch1 = 10,10,40 ; window 1: ch0 = 9,9,9 ; ch1 = -1,0,7
        const double vals[2][3][2] = {{{1, 10}, {2, 10}, {3, 40}}, {{9, -1}, {9, 0}, {9, 7}}};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j)
                for (int c = 0; c < 2; ++c) a(i, j, c) = vals[i][j][c];
        const auto s = robust_loc_scale(a);
        CHECK(s.loc(0, 0) == 2.0);
        CHECK(s.scale(0, 0) == 1.0);
        CHECK(s.loc(0, 1) == 10.0);
        CHECK(s.scale(0, 1) == 1.0);  // raw MAD of |0,0,30| = 0 -> floored
        CHECK(s.is_degenerate(0, 1));
        CHECK(s.loc(1, 0) == 9.0);
        CHECK(s.is_degenerate(1, 0));
        CHECK(s.loc(1, 1) == 0.0);
        CHECK(s.scale(1, 1) == 1.0);
        CHECK(!s.is_degenerate(1, 1));
    }
    SUBCASE("non-finite input is rejected") {
        CHECK_THROWS_AS(robust_loc_scale(column({1, NAN})), DataError);
    }
}

TEST_CASE("mean_std_stats examples") {
    auto s = mean_std_stats(column({1, 2, 3}));
    CHECK(s.loc(0, 0) == doctest::Approx(2.0));
    CHECK(s.scale(0, 0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
    s = mean_std_stats(column({7, 7}));
    CHECK(s.loc(0, 0) == 7.0);
    CHECK(s.scale(0, 0) == 1.0);
    CHECK(s.is_degenerate(0, 0));
    s = mean_std_stats(column({-1, 1}));
    CHECK(s.loc(0, 0) == 0.0);
    CHECK(s.scale(0, 0) == 1.0);
    CHECK(!s.is_degenerate(0, 0));
}

TEST_CASE("median") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK(median({-7}) == -7.0);
}

TEST_CASE("jsu_forward examples") {
    CHECK(fwd1(0, 1, 0, 0, 1) == 0.0);
    CHECK(fwd1(std::sinh(1.0), 1, 0, 0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    // asinh(1) = ln(1 + sqrt 2)
    const double expect = -0.5 + 2.0 * std::log(1.0 + std::sqrt(2.0));
    CHECK(std::abs(fwd1(3, 2, -0.5, 1, 2) - expect) < 1e-14);
    CHECK(std::abs(fwd1(3, 2, -0.5, 1, 2) - 1.2627471740) < 1e-9);
}

TEST_CASE("jsu_inverse examples") {
    CHECK(inv1(0, 1, 0, 0, 1) == 0.0);
    CHECK(inv1(1.2627471740, 2, -0.5, 1, 2) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(std::abs(inv1(-0.5 + 2.0 * std::log(1.0 + std::sqrt(2.0)), 2, -0.5, 1, 2) - 3.0) < 1e-14);

    // huge delta: sinh(u) ~ u
    for (double z : {-3.0, -0.4, 0.7, 2.5}) {
        const double eps = 0.3, lam = 1.5, xi = 2.0, delta = 1e9;
        const double affine = lam + xi * (z - eps) / delta;
        CHECK(std::abs(inv1(z, delta, eps, lam, xi) - affine) <= 1e-12 * std::abs(affine));
    }
}

TEST_CASE("jsu maps reject invalid parameters") {
    CHECK_THROWS_AS(fwd1(1, 0, 0, 0, 1), DataError);
    CHECK_THROWS_AS(fwd1(1, -1, 0, 0, 1), DataError);
    CHECK_THROWS_AS(fwd1(1, 1, 0, 0, 0), DataError);
    CHECK_THROWS_AS(inv1(1, 0, 0, 0, 1), DataError);
    CHECK_THROWS_AS(inv1(1, 1, 0, 0, -2), DataError);
    CHECK_THROWS_AS(jsu_forward(column({1}), fixed_stats(1, 1, 0, 1), ShapeParams::shared_pair(2, 1, 0)), DataError);
}

TEST_CASE("revin examples") {
    const auto x = column({1, 2, 3});
    SUBCASE("unit stats, disabled post is the identity") {
        const auto z = revin_forward(x, fixed_stats(1, 1, 0, 1), AffinePost::identity(1));
        CHECK(z.data == x.data);
    }
    SUBCASE("z-score of [1,2,3]") {
        const auto z = revin_forward(x, mean_std_stats(x), AffinePost::identity(1));
        CHECK(z.data[0] == doctest::Approx(-1.2247448714).epsilon(1e-9));
        CHECK(z.data[1] == doctest::Approx(0.0));
        CHECK(z.data[2] == doctest::Approx(1.2247448714).epsilon(1e-9));
    }
    SUBCASE("disabled post ignores stored gamma and beta") {
        AffinePost p = AffinePost::identity(1, false);
        p.gamma = {3.0};
        p.beta = {-2.0};
        const auto z = revin_forward(x, mean_std_stats(x), p);
        const auto z0 = revin_forward(x, mean_std_stats(x), AffinePost::identity(1));
        CHECK(z.data == z0.data);
    }
    SUBCASE("zero gamma with the post enabled") {
        AffinePost p = AffinePost::identity(1, true);
        p.gamma = {0.0};
        CHECK_THROWS_AS(revin_forward(x, mean_std_stats(x), p), DataError);
    }
}

TEST_CASE("property: revin round trip and shape invariance") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 2 + rng.below(30);
        Array3 x(1, T, 1);
        for (double& v : x.data) v = rng.uniform(-50, 50) + std::sinh(2.0 * rng.normal());
        AffinePost p = AffinePost::identity(1, rng.uniform() < 0.5);
        p.gamma = {rng.uniform(0.2, 3.0) * (rng.uniform() < 0.5 ? -1 : 1)};
        p.beta = {rng.uniform(-2, 2)};
        const auto st = mean_std_stats(x);
        const auto z = revin_forward(x, st, p);
        const auto back = revin_inverse(z, st, p);
        for (std::size_t j = 0; j < T; ++j)
            CHECK(std::abs(back.data[j] - x.data[j]) <= 1e-12 * std::max(1.0, std::abs(x.data[j])));
        if (!p.enabled) {
            const auto mx = moments(x.data), mz = moments(z.data);
            if (mx.variance > 0)
                CHECK(std::abs(*mz.skewness - *mx.skewness) <= 1e-10 * std::max(1.0, std::abs(*mx.skewness)));
        }
    }
}

TEST_CASE("property: jsu round trip and monotonicity") {
    Rng rng(5);
    for (int trial = 0; trial < 5000; ++trial) {
        const double d = rng.uniform(0.8, 5.0), e = rng.uniform(-1, 1);
        const double xi = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
        const double lam = rng.uniform(-100, 100);
        const double x = lam + xi * rng.uniform(-50, 50);
        const double back = inv1(fwd1(x, d, e, lam, xi), d, e, lam, xi);
        CHECK(std::abs(back - x) <= 1e-9 * std::max(std::abs(x), 1e-300));
        const double x2 = x + std::abs(x) * 1e-6 + 1e-9;
        CHECK(fwd1(x2, d, e, lam, xi) > fwd1(x, d, e, lam, xi));
    }
}

TEST_CASE("near-linear limit obeys the asinh cubic bound") {
    // asinh(u) - u ~ -u^3 / 6, so the relative deviation from the affine map is about u^2 / 6
    Rng rng(99);
    const std::vector<double> data{-3.0, -1.0, 0.25, 2.0, 4.0};
    for (double u_max : {1e-2, 1e-3, 1e-4}) {
        const double lam = 0.5, d = 1.7, e = -0.2;
        const double xi = 3.5 / u_max;  // max |x - lam| = 3.5
        double dev = 0.0, aff = 0.0;
        for (double x : data) {
            const double lin = d * (x - lam) / xi;
            dev = std::max(dev, std::abs(fwd1(x, d, e, lam, xi) - (e + lin)));
            aff = std::max(aff, std::abs(lin));
        }
        CHECK(dev <= (u_max * u_max / 6.0) * aff * 1.01 + 1e-15);
        CHECK(dev >= (u_max * u_max / 6.0) * aff * 0.9);
    }
}

TEST_CASE("shape partials: closed-form points") {
    const double d = 1.7, e = 0.3, lam = 2.0, xi = 0.5;
    const auto f = jsu_forward_partials(lam, d, lam, xi);
    CHECK(f.d_delta == 0.0);
    CHECK(f.d_epsilon == 1.0);
    CHECK(f.d_x == doctest::Approx(d / xi));
    const auto g = jsu_inverse_partials(e, d, e, xi);
    CHECK(g.d_delta == 0.0);
    CHECK(g.d_epsilon == doctest::Approx(-xi / d));
    CHECK(g.d_z == doctest::Approx(xi / d));
}

TEST_CASE("property: shape partials match central differences") {
    Rng rng(314);
    for (int trial = 0; trial < 1000; ++trial) {
        const double d = rng.uniform(0.8, 5.0), e = rng.uniform(-1, 1);
        const double xi = rng.uniform(0.5, 3.0), lam = rng.uniform(-2, 2);
        const double x = lam + xi * rng.uniform(-4, 4);
        const double z = rng.uniform(-3, 3);

        const auto x_arr = column({x}), z_arr = column({z});
        const auto st = fixed_stats(1, 1, lam, xi);
        const auto sh = ShapeParams::shared_pair(1, d, e);
        const auto fg = jsu_forward_grads(x_arr, st, sh);
        const auto ig = jsu_inverse_grads(z_arr, st, sh);

        using oracle::central_diff;
        using oracle::rel_err;
        const double tol = 1e-5;
        CHECK(rel_err(fg.d_delta.data[0], central_diff([&](double v) { return fwd1(x, v, e, lam, xi); }, d)) < tol);
        CHECK(rel_err(fg.d_epsilon.data[0], central_diff([&](double v) { return fwd1(x, d, v, lam, xi); }, e)) < tol);
        CHECK(rel_err(fg.d_x.data[0], central_diff([&](double v) { return fwd1(v, d, e, lam, xi); }, x)) < tol);
        CHECK(rel_err(ig.d_delta.data[0], central_diff([&](double v) { return inv1(z, v, e, lam, xi); }, d)) < tol);
        CHECK(rel_err(ig.d_epsilon.data[0], central_diff([&](double v) { return inv1(z, d, v, lam, xi); }, e)) < tol);
        CHECK(rel_err(ig.d_z.data[0], central_diff([&](double v) { return inv1(v, d, e, lam, xi); }, z)) < tol);
    }
}

TEST_CASE("reshaping a matched JSU sample gives near-normal moments") {
    const double d0 = 1.3, e0 = -0.7, l0 = 4.0, x0 = 2.5;
    Rng rng(8);
    const std::size_t n = 100000;
    Array3 x(1, n, 1);
    for (double& v : x.data) v = l0 + x0 * std::sinh((rng.normal() - e0) / d0);
    const auto z = jsu_forward(x, fixed_stats(1, 1, l0, x0), ShapeParams::shared_pair(1, d0, e0));
    const auto m = moments(z.data);
    CHECK(std::abs(*m.skewness) <= 0.05);
    CHECK(std::abs(*m.kurtosis - 3.0) <= 0.1);
    CHECK(std::abs(*moments(x.data).kurtosis - 3.0) > 1.0);
}

TEST_CASE("moments oracle agrees with the library") {
    Rng rng(1);
    std::vector<double> x(1000);
    for (double& v : x) v = std::sinh(rng.normal() + 0.3);
    const auto o = oracle::central_moments(x);
    const auto m = moments(x);
    CHECK(m.mean == doctest::Approx(static_cast<double>(o.mean)).epsilon(1e-12));
    CHECK(*m.skewness == doctest::Approx(static_cast<double>(o.m3 / std::pow(o.m2, 1.5L))).epsilon(1e-10));
    CHECK(*m.kurtosis == doctest::Approx(static_cast<double>(o.m4 / (o.m2 * o.m2))).epsilon(1e-10));
}

TEST_CASE("shape JSON round trip and validation") {
    ShapeParams s;
    s.shared = false;
    s.delta = {1.5, 2.0};
    s.epsilon = {-0.25, 0.5};
    s.channels = {"a", "b"};
    const auto j = to_json(s);
    CHECK(j.contains("shared"));
    CHECK(j.contains("delta"));
    CHECK(j.contains("epsilon"));
    CHECK(j.contains("channels"));
    CHECK(shape_from_json(j) == s);

    ShapeParams bad = ShapeParams::shared_pair(2, 1.0, 0.0);
    bad.delta[1] = 2.0;
    CHECK_THROWS_AS(bad.validate(), DataError);
    CHECK_THROWS_AS(shape_from_json(nlohmann::json{{"delta", "x"}}), DataError);
}

TEST_CASE("normalizer names") {
    CHECK(normalizer_from_string("none") == NormalizerKind::None);
    CHECK(normalizer_from_string("identity") == NormalizerKind::None);
    CHECK(normalizer_from_string("revin") == NormalizerKind::RevIN);
    CHECK(normalizer_from_string("norin") == NormalizerKind::NoRIN);
    CHECK_THROWS_AS(normalizer_from_string("batchnorm"), DataError);
    CHECK(std::string(to_string(NormalizerKind::NoRIN)) == "norin");
}
