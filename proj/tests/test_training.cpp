#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "poc/rng.hpp"
#include "poc/simulation.hpp"
#include "poc/training.hpp"

using namespace poc;

namespace {

ThresholdedSample bernoulli_sample(std::size_t n, double prob,
                                   std::uint64_t seed) {
    Rng rng(seed);
    ThresholdedSample s;
    s.features = Matrix(n, 1);
    s.outcomes = Matrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        s.features(i, 0) = rng.uniform();
        s.outcomes(i, 0) = rng.bernoulli(prob) ? 1.0 : 0.0;
    }
    s.retained = n;
    return s;
}

std::vector<double> params_of(const PocEstimate& e) {
    std::vector<double> p(e.net.parameter_count());
    e.net.parameters_to(p);
    return p;
}

}  // namespace

TEST_CASE("lbfgs minimizes a convex quadratic (strong Wolfe)") {
    FitConfig cfg;
    cfg.step_mode = StepMode::StrongWolfe;
    cfg.gradient_tolerance = 1e-10;
    auto objective = [](const std::vector<double>& x, std::vector<double>& g) {
        g = {2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)};
        return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
    };
    const auto res = lbfgs_minimize({0.0, 0.0}, objective, cfg);
    CHECK(res.converged);
    CHECK(res.best_x[0] == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(res.best_x[1] == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("lbfgs minimizes the same quadratic with fixed steps") {
    FitConfig cfg;
    cfg.step_mode = StepMode::FixedStep;
    cfg.learning_rate = 0.4;
    cfg.max_iterations = 200;
    auto objective = [](const std::vector<double>& x, std::vector<double>& g) {
        g = {2.0 * (x[0] - 3.0), 8.0 * (x[1] + 1.0)};
        return (x[0] - 3.0) * (x[0] - 3.0) + 4.0 * (x[1] + 1.0) * (x[1] + 1.0);
    };
    const auto res = lbfgs_minimize({0.0, 0.0}, objective, cfg);
    CHECK(res.best_x[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(res.best_x[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("constant-truth oracle: fitted curve stays near 0.5") {
    const auto sample = bernoulli_sample(2000, 0.5, 5);
    FitConfig cfg;
    cfg.init_seed = 4;
    const auto est =
        fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    for (int i = 0; i <= 100; ++i) {
        const double x = i / 100.0;
        const double a = est.net.forward(std::span<const double>(&x, 1))[0];
        CHECK(std::fabs(a - 0.5) <= 0.05);
    }
}

TEST_CASE("scenario oracle: single-sample A1 surface error below 1e-3") {
    const std::uint64_t seed = 29;
    const ScenarioDraw draw = generate(ScenarioId::A1, 10000, seed);
    const ThresholdedSample sample = build_threshold_sample(draw.raw, 0.95);
    FitConfig cfg;
    cfg.init_seed = seed;
    const PocEstimate est = fit_scenario(ScenarioId::A1, sample, cfg);

    const Matrix grid = evaluation_grid(1);
    Matrix truth(grid.rows, 1);
    for (std::size_t i = 0; i < grid.rows; ++i)
        truth(i, 0) =
            true_poc(ScenarioId::A1,
                     std::span<const double>(grid.row(i), 1))[0];
    const Matrix scaled = apply_scaling(sample.scaling, grid);
    const Matrix pred = est.net.forward_batch(scaled);
    const double ise = mise(grid, pred, truth, 1)[0];
    CHECK(ise < 1e-3);
}

TEST_CASE("duplicating the dataset leaves the fit unchanged") {
    const auto base = bernoulli_sample(300, 0.4, 5);
    ThresholdedSample doubled;
    doubled.features = Matrix(600, 1);
    doubled.outcomes = Matrix(600, 1);
    for (std::size_t i = 0; i < 600; ++i) {
        doubled.features(i, 0) = base.features(i % 300, 0);
        doubled.outcomes(i, 0) = base.outcomes(i % 300, 0);
    }
    doubled.retained = 600;

    FitConfig cfg;
    const auto a = fit(base, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    const auto b =
        fit(doubled, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    const auto pa = params_of(a);
    const auto pb = params_of(b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(std::fabs(pa[i] - pb[i]) <= 1e-9);
}

TEST_CASE("seed determinism: identical runs give bit-identical coefficients") {
    const auto sample = bernoulli_sample(500, 0.35, 61);
    FitConfig cfg;
    cfg.init_seed = 9;
    const auto a = fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    const auto b = fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    CHECK(params_of(a) == params_of(b));
    CHECK(a.report.final_loss == b.report.final_loss);
    CHECK(a.report.loss_trace == b.report.loss_trace);
}

TEST_CASE("strong Wolfe accepted steps never increase the loss") {
    const auto sample = bernoulli_sample(800, 0.6, 33);
    FitConfig cfg;
    cfg.step_mode = StepMode::StrongWolfe;
    const auto est =
        fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    const auto& trace = est.report.loss_trace;
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("reported minimizer: small gradient or iteration cap") {
    const auto sample = bernoulli_sample(400, 0.5, 3);
    FitConfig cfg;
    cfg.step_mode = StepMode::StrongWolfe;
    const auto est =
        fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg);
    CHECK((est.report.converged || est.report.iterations == cfg.max_iterations));
}

TEST_CASE("trigger-transform invariance: fits on h(Y) are bit-identical") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const ScenarioDraw draw = generate(ScenarioId::A1, 5000, seed);
        RawDataset exp_raw = draw.raw;
        RawDataset cube_raw = draw.raw;
        // exp overflows to +inf for the largest triggers; membership in the
        // thresholded set is unaffected, so the fit must still match.
        for (auto& y : exp_raw.triggers.data) y = std::exp(y);
        for (auto& y : cube_raw.triggers.data) y = y * y * y;

        const auto base = build_threshold_sample(draw.raw, 0.95);
        const auto via_exp = build_threshold_sample(exp_raw, 0.95);
        const auto via_cube = build_threshold_sample(cube_raw, 0.95);
        REQUIRE(base.features.data == via_exp.features.data);
        REQUIRE(base.features.data == via_cube.features.data);
        REQUIRE(base.outcomes.data == via_exp.outcomes.data);
        REQUIRE(base.outcomes.data == via_cube.outcomes.data);

        FitConfig cfg;
        cfg.init_seed = seed;
        const auto f0 = fit_scenario(ScenarioId::A1, base, cfg);
        const auto f1 = fit_scenario(ScenarioId::A1, via_exp, cfg);
        const auto f2 = fit_scenario(ScenarioId::A1, via_cube, cfg);
        CHECK(params_of(f0) == params_of(f1));
        CHECK(params_of(f0) == params_of(f2));
    }
}

TEST_CASE("fit config document round trip") {
    FitConfig cfg;
    cfg.max_iterations = 42;
    cfg.history_size = 7;
    cfg.gradient_tolerance = 1e-6;
    cfg.step_mode = StepMode::StrongWolfe;
    cfg.learning_rate = 0.5;
    cfg.init_seed = 99;
    cfg.loss = LossKind::MultiCE;
    const auto back = FitConfig::from_document(cfg.to_document());
    CHECK(back.max_iterations == cfg.max_iterations);
    CHECK(back.history_size == cfg.history_size);
    CHECK(back.gradient_tolerance == cfg.gradient_tolerance);
    CHECK(back.step_mode == cfg.step_mode);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.init_seed == cfg.init_seed);
    CHECK(back.loss == cfg.loss);

    CHECK_THROWS(FitConfig::from_document(R"({"loss":"nope"})"));
    CHECK_THROWS(FitConfig::from_document(R"({"max_iterations":0})"));
    CHECK_THROWS(FitConfig::from_document(R"({"step_mode":"nope"})"));
}

TEST_CASE("invalid fit inputs are rejected") {
    FitConfig cfg;
    ThresholdedSample empty;
    CHECK_THROWS(fit(empty, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg));

    auto sample = bernoulli_sample(100, 0.5, 1);
    CHECK_THROWS(
        fit(sample, {2, 5, 1}, SplineSpec(3, 2), GLayer::sigmoid(), cfg));

    FitConfig bad = cfg;
    bad.max_iterations = 0;
    CHECK_THROWS(
        fit(sample, {1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid(), bad));
}
