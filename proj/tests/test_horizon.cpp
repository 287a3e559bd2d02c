#include "rsmv/horizon.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rsmv;
using rsmv::testing::error_code_of;

TEST_CASE("build_horizon") {
    const auto h = build_horizon({{0.0, 0.5}}, 1.0, 0.1);
    CHECK(cdf(h, 1.0) == doctest::Approx(0.5));
    const auto none = build_horizon({{0.0, 0.0}}, 1.0);
    CHECK(cdf(none, 0.7) == 0.0);
    CHECK(none.epsilon() == 0.05);
    CHECK(error_code_of([] { build_horizon({{0.0, 1.2}}, 1.0, 0.1); }) == "SurvivalMarginViolated");
    CHECK(error_code_of([] { build_horizon({{0.0, 0.95}}, 1.0, 0.1); }) == "SurvivalMarginViolated");
    CHECK(error_code_of([] { build_horizon({{0.0, -0.1}}, 1.0); }) == "NegativeDensity");
    CHECK(error_code_of([] { build_horizon({{0.2, 0.1}}, 1.0); }) == "ScheduleGap");
    CHECK(error_code_of([] { build_horizon({{0.0, 0.1}, {1.0, 0.1}}, 1.0); }) == "ScheduleGap");
    CHECK(error_code_of([] { build_horizon({{0.0, 0.1}}, 1.0, 1.0); }) == "BadEpsilon");
    CHECK(error_code_of([] { build_horizon({{0.0, 0.1}}, 0.0); }) == "NonPositiveHorizon");
    // F(T) = 1 - epsilon exactly is allowed.
    CHECK(build_horizon({{0.0, 0.9}}, 1.0, 0.1).exit_probability() == doctest::Approx(0.9));
}

TEST_CASE("cdf") {
    const auto h = build_horizon({{0.0, 0.8}, {0.5, 0.0}}, 1.0);
    CHECK(cdf(h, 0.0) == 0.0);
    CHECK(cdf(h, 0.25) == doctest::Approx(0.2));
    CHECK(cdf(h, 1.0) == doctest::Approx(0.4));
    CHECK(h.density(0.7) == 0.0);
    CHECK(h.density(0.2) == 0.8);
    CHECK(error_code_of([&] { cdf(h, 1.5); }) == "OutOfRangeTime");
    CHECK(error_code_of([&] { cdf(h, -0.5); }) == "OutOfRangeTime");
    double prev = 0.0;
    for (double t = 0.0; t <= 1.0; t += 0.01) {
        CHECK(cdf(h, t) >= prev);
        prev = cdf(h, t);
    }
    CHECK(prev <= 1.0 - h.epsilon());
}

TEST_CASE("sample_exit") {
    const auto h = build_horizon({{0.0, 0.5}}, 1.0);
    CHECK(sample_exit(h, 0.25) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sample_exit(h, 0.7) == 1.0);
    CHECK(sample_exit(h, 0.5) == 1.0);
    const auto none = build_horizon({{0.0, 0.0}}, 1.0);
    for (double u : {0.0, 0.3, 0.999}) CHECK(sample_exit(none, u) == 1.0);

    const auto gap = build_horizon({{0.0, 0.6}, {0.25, 0.0}, {0.5, 0.4}}, 1.0);
    double prev = 0.0;
    for (double u = 0.0; u < gap.exit_probability(); u += 0.005) {
        const double t = sample_exit(gap, u);
        CHECK(t >= prev);
        CHECK(!(t > 0.25 && t < 0.5));
        CHECK(cdf(gap, t) == doctest::Approx(u).epsilon(1e-12));
        prev = t;
    }
}

TEST_CASE("sampled exit times reproduce the weighting identity") {
    const auto h = build_horizon({{0.0, 0.3}, {0.4, 0.9}}, 1.0);
    auto fn = [](double t) { return std::cos(3.0 * t) + t * t; };
    // int_0^T f(t) h(t) dt + (1 - F(T)) h(T), exact antiderivative of cos(3t) + t^2.
    auto prim = [](double t) { return std::sin(3.0 * t) / 3.0 + t * t * t / 3.0; };
    const double exact = 0.3 * (prim(0.4) - prim(0.0)) + 0.9 * (prim(1.0) - prim(0.4)) +
                         (1.0 - h.exit_probability()) * fn(1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = 100000;
    double s = 0.0;
    double s2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double v = fn(sample_exit(h, unif(rng)));
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - exact) <= 3.0 * se);
}
