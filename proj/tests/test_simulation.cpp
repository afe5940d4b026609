#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "poc/normal.hpp"
#include "poc/simulation.hpp"

using namespace poc;

TEST_CASE("scenario name and shape bookkeeping") {
    for (const auto* name : {"A1", "A2", "B1", "B2", "C"})
        CHECK(scenario_name(scenario_from_name(name)) == name);
    CHECK_THROWS(scenario_from_name("A3"));
    CHECK(scenario_dim(ScenarioId::A1) == 1);
    CHECK(scenario_dim(ScenarioId::B2) == 2);
    CHECK(scenario_categories(ScenarioId::B1) == 1);
    CHECK(scenario_categories(ScenarioId::C) == 3);
}

TEST_CASE("frechet draws follow the exp(-1/y) distribution") {
    Rng rng(314);
    const std::size_t n = 1000000;
    std::vector<double> y(n);
    for (auto& v : y) v = frechet_sample(rng);
    std::sort(y.begin(), y.end());

    // KS statistic against the analytic distribution function.
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::exp(-1.0 / y[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        ks = std::max({ks, std::fabs(f - lo), std::fabs(f - hi)});
    }
    CHECK(ks < 0.003);

    const double median = y[n / 2];
    const double target = 1.0 / std::log(2.0);
    CHECK(std::fabs(median - target) / target < 0.02);
}

TEST_CASE("normal cdf and quantile invert each other") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-12));
    CHECK(normal_cdf(-1.0) ==
          doctest::Approx(0.15865525393145707).epsilon(1e-12));
    for (double p : {0.001, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    }
    for (double x : {-3.0, -0.7, 0.0, 1.3, 2.8}) {
        CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-8));
    }
}

TEST_CASE("true surfaces at hand-computed points") {
    auto at1 = [](ScenarioId id, double x) {
        return true_poc(id, std::span<const double>(&x, 1))[0];
    };
    auto at2 = [](ScenarioId id, double x1, double x2) {
        const double x[2] = {x1, x2};
        return true_poc(id, std::span<const double>(x, 2));
    };
    CHECK(at1(ScenarioId::A1, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(at1(ScenarioId::A1, 1.0) ==
          doctest::Approx(normal_cdf(1.0)).epsilon(1e-15));
    CHECK(at1(ScenarioId::A2, 1.0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(at2(ScenarioId::B1, 0.0, 0.0)[0] ==
          doctest::Approx(0.25).epsilon(1e-14));
    CHECK(at2(ScenarioId::B2, 0.0, 0.0)[0] == doctest::Approx(0.9).epsilon(1e-14));
    CHECK(at2(ScenarioId::B2, 0.0, 0.5)[0] == doctest::Approx(0.1).epsilon(1e-14));

    const auto c = at2(ScenarioId::C, 0.3, 0.7);
    REQUIRE(c.size() == 3);
    CHECK(c[0] + c[1] + c[2] == doctest::Approx(1.0).epsilon(1e-14));
    for (double p : c) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
}

TEST_CASE("finite-threshold probabilities approach the limit surface") {
    const double x = 0.4;
    std::size_t clamped = 0;
    const auto near = scenario_probability(
        ScenarioId::A1, std::span<const double>(&x, 1), 50.0, &clamped);
    const auto limit = true_poc(ScenarioId::A1, std::span<const double>(&x, 1));
    CHECK(std::fabs(near[0] - limit[0]) < 1e-10);
    CHECK_THROWS(scenario_probability(ScenarioId::A1,
                                      std::span<const double>(&x, 1), 0.0));
}

TEST_CASE("generate: exactly 5% of rows exceed the threshold") {
    const ScenarioDraw draw = generate(ScenarioId::A1, 10000, 7);
    std::size_t above = 0;
    for (std::size_t i = 0; i < 10000; ++i)
        if (draw.raw.triggers(i, 0) > draw.threshold) ++above;
    CHECK(above == 500);

    const ThresholdedSample sample = build_threshold_sample(draw.raw, 0.95);
    CHECK(sample.retained == 500);
    CHECK(sample.threshold == draw.threshold);
}

TEST_CASE("generate: exceedance outcomes follow the scenario probabilities") {
    const ScenarioDraw draw = generate(ScenarioId::A1, 50000, 99);
    const double u = draw.threshold;
    double expected = 0.0, observed = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < 50000; ++i) {
        if (draw.raw.triggers(i, 0) <= u) continue;
        const double x = draw.raw.features(i, 0);
        expected +=
            scenario_probability(ScenarioId::A1,
                                 std::span<const double>(&x, 1), u)[0];
        observed += draw.raw.followup(i, 0);
        ++k;
    }
    REQUIRE(k == 2500);
    // Four binomial standard deviations.
    const double tol = 4.0 * std::sqrt(0.25 * static_cast<double>(k));
    CHECK(std::fabs(observed - expected) < tol);
}

TEST_CASE("generate is deterministic in the seed") {
    const ScenarioDraw a = generate(ScenarioId::B2, 2000, 11);
    const ScenarioDraw b = generate(ScenarioId::B2, 2000, 11);
    CHECK(a.raw.features.data == b.raw.features.data);
    CHECK(a.raw.triggers.data == b.raw.triggers.data);
    CHECK(a.raw.followup.data == b.raw.followup.data);
    const ScenarioDraw c = generate(ScenarioId::B2, 2000, 12);
    CHECK(a.raw.triggers.data != c.raw.triggers.data);
}

TEST_CASE("evaluation grid shapes and ranges") {
    const Matrix g1 = evaluation_grid(1);
    REQUIRE(g1.rows == 1001);
    CHECK(g1(0, 0) == 0.0);
    CHECK(g1(500, 0) == 0.5);
    CHECK(g1(1000, 0) == 1.0);

    const Matrix g2 = evaluation_grid(2);
    REQUIRE(g2.rows == 10201);
    REQUIRE(g2.cols == 2);
    CHECK(g2(0, 0) == 0.0);
    CHECK(g2(0, 1) == 0.0);
    CHECK(g2(10200, 0) == 1.0);
    CHECK(g2(10200, 1) == 1.0);

    CHECK_THROWS(evaluation_grid(3));
}

TEST_CASE("mise: zero for identical surfaces, eps^2 for a constant offset") {
    const Matrix grid = evaluation_grid(1);
    Matrix a(grid.rows, 1), b(grid.rows, 1);
    for (std::size_t i = 0; i < grid.rows; ++i) {
        a(i, 0) = std::sin(grid(i, 0));
        b(i, 0) = a(i, 0);
    }
    CHECK(mise(grid, a, b, 1)[0] == 0.0);

    const double eps = 1e-3;
    for (std::size_t i = 0; i < grid.rows; ++i) b(i, 0) = a(i, 0) + eps;
    CHECK(mise(grid, a, b, 1)[0] == doctest::Approx(eps * eps).epsilon(1e-12));
}

TEST_CASE("mise matches the analytic integral of x^2 on both grids") {
    const Matrix g1 = evaluation_grid(1);
    Matrix est(g1.rows, 1), truth(g1.rows, 1);
    for (std::size_t i = 0; i < g1.rows; ++i) est(i, 0) = g1(i, 0);
    // Trapezoid rule on x^2 has error h^2/6 per unit length.
    CHECK(mise(g1, est, truth, 1)[0] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    const Matrix g2 = evaluation_grid(2);
    Matrix est2(g2.rows, 1), truth2(g2.rows, 1);
    for (std::size_t i = 0; i < g2.rows; ++i) est2(i, 0) = g2(i, 0) * g2(i, 1);
    // integral of x1^2 x2^2 over the unit square = 1/9.
    CHECK(mise(g2, est2, truth2, 2)[0] ==
          doctest::Approx(1.0 / 9.0).epsilon(1e-4));

    Matrix wrong(3, 1);
    CHECK_THROWS(mise(g1, wrong, truth, 1));
}

TEST_CASE("monte carlo study: bookkeeping and determinism") {
    FitConfig cfg;
    cfg.max_iterations = 15;  // smoke-test depth
    const StudySummary s = monte_carlo(ScenarioId::A1, 4000, 3, 900, cfg);
    CHECK(s.replicates == 3);
    CHECK(s.failures == 0);
    REQUIRE(s.records.size() == 3);
    for (int r = 0; r < 3; ++r) {
        CHECK(s.records[static_cast<std::size_t>(r)].replicate == r);
        CHECK(s.records[static_cast<std::size_t>(r)].seed ==
              900ull + static_cast<std::uint64_t>(r));
        CHECK(s.records[static_cast<std::size_t>(r)].retained == 200);
        CHECK(s.records[static_cast<std::size_t>(r)].mise[0] > 0.0);
    }
    REQUIRE(s.mean_mise.size() == 1);
    CHECK(s.mean_mise[0] ==
          doctest::Approx((s.records[0].mise[0] + s.records[1].mise[0] +
                           s.records[2].mise[0]) /
                          3.0)
              .epsilon(1e-15));
    CHECK(s.median_mise[0] > 0.0);
    CHECK(s.mean_curve_mise[0] > 0.0);
    CHECK(s.mean_curve_mise[0] <= s.mean_mise[0] + 1e-15);  // Jensen

    const StudySummary again = monte_carlo(ScenarioId::A1, 4000, 3, 900, cfg);
    CHECK(again.mean_mise == s.mean_mise);
    CHECK(again.mean_estimate.data == s.mean_estimate.data);

    CHECK_THROWS(monte_carlo(ScenarioId::A1, 4000, 0, 1, cfg));
}

TEST_CASE("scenario C study produces three mise columns") {
    FitConfig cfg;
    cfg.max_iterations = 10;
    const StudySummary s = monte_carlo(ScenarioId::C, 4000, 2, 50, cfg);
    REQUIRE(s.mean_mise.size() == 3);
    REQUIRE(s.mean_curve_mise.size() == 3);
    for (double v : s.mean_mise) CHECK(v > 0.0);
    REQUIRE(s.mean_estimate.cols == 3);
    // Softmax output: every grid row is a simplex point, so the mean is too.
    for (std::size_t r = 0; r < s.mean_estimate.rows; r += 997) {
        const double sum = s.mean_estimate(r, 0) + s.mean_estimate(r, 1) +
                           s.mean_estimate(r, 2);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    }
}
