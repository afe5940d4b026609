#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "poc/data.hpp"
#include "poc/training.hpp"

namespace poc {

// Randomized quantile residuals for the binary thresholded sample; standard
// normal when the fitted surface is correct.
struct ResidualSet {
    std::vector<std::vector<double>> trajectories;  // T x n_u
    std::uint64_t seed = 0;
};

// alpha(x) for each row; lets tests plug the true surface in place of a fit.
using SurfaceFn = std::function<double(std::span<const double>)>;

ResidualSet dunn_smyth(const SurfaceFn& surface, const ThresholdedSample& data,
                       int trajectories, std::uint64_t seed);
ResidualSet dunn_smyth(const PocEstimate& fit, const ThresholdedSample& data,
                       int trajectories, std::uint64_t seed);

struct QqPoint {
    double theoretical = 0.0;
    double observed = 0.0;
    double band_lo = 0.0;
    double band_hi = 0.0;
};

// Sorted residuals against normal quantiles at (i-0.5)/n with a pointwise
// 95% band from the order-statistic normal approximation.
std::vector<QqPoint> qq_reference(const std::vector<double>& residuals);

struct BootstrapBand {
    Matrix grid;
    std::vector<double> lower;
    std::vector<double> point;  // estimate from the full sample
    std::vector<double> upper;
    double level = 0.95;
    int replicates = 0;
    int degenerate_resamples = 0;  // refit with the constant fallback
};

// Resampling-cases bootstrap: B refits on resampled rows, pointwise
// percentile interval of the fitted surface at each grid point.
BootstrapBand bootstrap_ci(const ThresholdedSample& data,
                           const std::vector<int>& widths,
                           const SplineSpec& spec, const FitConfig& config,
                           int b_replicates, const Matrix& grid, double level,
                           std::uint64_t seed, int threads = 1);

}  // namespace poc
