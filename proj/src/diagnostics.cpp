#include "poc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "poc/normal.hpp"
#include "poc/rng.hpp"

namespace poc {

namespace {
double clamp_unit(double p) { return std::clamp(p, 1e-12, 1.0 - 1e-12); }
}  // namespace

ResidualSet dunn_smyth(const SurfaceFn& surface, const ThresholdedSample& data,
                       int trajectories, std::uint64_t seed) {
    if (trajectories < 1)
        throw std::invalid_argument("need at least one trajectory");
    if (data.outcomes.cols != 1)
        throw std::invalid_argument(
            "Dunn-Smyth residuals are defined for binary outcomes");
    const std::size_t n = data.features.rows;
    std::vector<double> alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
        alpha[i] = surface(
            std::span<const double>(data.features.row(i), data.features.cols));
    }
    ResidualSet set;
    set.seed = seed;
    set.trajectories.resize(static_cast<std::size_t>(trajectories));
    for (int t = 0; t < trajectories; ++t) {
        Rng rng(seed + static_cast<std::uint64_t>(t));
        auto& traj = set.trajectories[static_cast<std::size_t>(t)];
        traj.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double cut = 1.0 - alpha[i];
            const double v = data.outcomes(i, 0) == 1.0
                                 ? rng.uniform(cut, 1.0)
                                 : rng.uniform(0.0, cut);
            traj[i] = normal_quantile(clamp_unit(v));
        }
    }
    return set;
}

ResidualSet dunn_smyth(const PocEstimate& fit, const ThresholdedSample& data,
                       int trajectories, std::uint64_t seed) {
    return dunn_smyth(
        [&fit](std::span<const double> x) { return fit.net.forward(x)[0]; },
        data, trajectories, seed);
}

std::vector<QqPoint> qq_reference(const std::vector<double>& residuals) {
    if (residuals.empty()) throw std::invalid_argument("empty trajectory");
    const std::size_t n = residuals.size();
    std::vector<double> sorted(residuals);
    std::sort(sorted.begin(), sorted.end());
    std::vector<QqPoint> out(n);
    const double z95 = normal_quantile(0.975);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double q = normal_quantile(p);
        // Pointwise band from the asymptotic variance of the order statistic:
        // se = sqrt(p(1-p)/n) / phi(q).
        const double density = std::exp(-0.5 * q * q) * 0.39894228040143267794;
        const double se =
            std::sqrt(p * (1.0 - p) / static_cast<double>(n)) / density;
        out[i] = {q, sorted[i], q - z95 * se, q + z95 * se};
    }
    return out;
}

BootstrapBand bootstrap_ci(const ThresholdedSample& data,
                           const std::vector<int>& widths,
                           const SplineSpec& spec, const FitConfig& config,
                           int b_replicates, const Matrix& grid, double level,
                           std::uint64_t seed, int threads) {
    if (b_replicates < 50)
        throw std::invalid_argument("need at least 50 bootstrap replicates");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("level must be in (0,1)");
    const std::size_t n = data.features.rows;
    const std::size_t g = grid.rows;

    BootstrapBand band;
    band.grid = grid;
    band.level = level;
    band.replicates = b_replicates;

    {
        FitConfig cfg = config;
        cfg.loss = LossKind::BinaryCE;
        const PocEstimate full = fit(data, widths, spec, GLayer::sigmoid(), cfg);
        const Matrix pred = full.net.forward_batch(grid);
        band.point.assign(pred.data.begin(), pred.data.end());
    }

    // surfaces[b][p]: replicate b evaluated at grid point p.
    std::vector<std::vector<double>> surfaces(
        static_cast<std::size_t>(b_replicates));
    std::vector<int> degenerate(static_cast<std::size_t>(b_replicates), 0);

    auto run_one = [&](int b) {
        Rng rng(seed + static_cast<std::uint64_t>(b));
        ThresholdedSample resample = data;
        resample.levels.clear();
        double positives = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pick = rng.index(n);
            for (std::size_t j = 0; j < data.features.cols; ++j)
                resample.features(i, j) = data.features(pick, j);
            resample.outcomes(i, 0) = data.outcomes(pick, 0);
            positives += resample.outcomes(i, 0);
        }
        auto& surf = surfaces[static_cast<std::size_t>(b)];
        if (positives == 0.0 || positives == static_cast<double>(n)) {
            degenerate[static_cast<std::size_t>(b)] = 1;
            surf.assign(g, positives / static_cast<double>(n));
            return;
        }
        FitConfig cfg = config;
        cfg.loss = LossKind::BinaryCE;
        cfg.init_seed = config.init_seed + static_cast<std::uint64_t>(b) + 1;
        const PocEstimate est = fit(resample, widths, spec, GLayer::sigmoid(), cfg);
        const Matrix pred = est.net.forward_batch(grid);
        surf.assign(pred.data.begin(), pred.data.end());
    };

    if (threads <= 1) {
        for (int b = 0; b < b_replicates; ++b) run_one(b);
    } else {
        std::vector<std::thread> pool;
        const int t_count = std::min(threads, b_replicates);
        for (int t = 0; t < t_count; ++t) {
            pool.emplace_back([&, t]() {
                for (int b = t; b < b_replicates; b += t_count) run_one(b);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (int flag : degenerate) band.degenerate_resamples += flag;

    band.lower.resize(g);
    band.upper.resize(g);
    const double tail = 0.5 * (1.0 - level);
    std::vector<double> column(static_cast<std::size_t>(b_replicates));
    for (std::size_t p = 0; p < g; ++p) {
        for (int b = 0; b < b_replicates; ++b)
            column[static_cast<std::size_t>(b)] =
                surfaces[static_cast<std::size_t>(b)][p];
        std::sort(column.begin(), column.end());
        // Percentile interval via order statistics at ceil(q*B).
        auto pick = [&](double q) {
            const auto rank = static_cast<std::size_t>(std::max(
                1.0, std::ceil(q * static_cast<double>(b_replicates))));
            return column[std::min(rank, column.size()) - 1];
        };
        band.lower[p] = pick(tail);
        band.upper[p] = pick(1.0 - tail);
    }
    return band;
}

}  // namespace poc
