#pragma once

#include <cstddef>
#include <vector>

#include "poc/matrix.hpp"

namespace poc {

// Per-column min-max scaling fitted on training rows. Constant columns map
// to 0.5 and are flagged; out-of-range values on new data are clipped.
struct ScalingParams {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<bool> constant;
};

enum class FollowupKind { Binary, Categorical, Ordinal, Continuous };

struct RawDataset {
    Matrix features;   // n x d, any real scale
    Matrix triggers;   // n x k_triggers
    FollowupKind kind = FollowupKind::Binary;
    Matrix followup;   // binary/continuous/ordinal: n x 1; categorical: n x J one-hot
    int categories = 1;  // J for ordinal/categorical
};

// The thresholded training set: rows where the trigger exceeds u (strict),
// features rescaled to [0,1] on the retained rows.
struct ThresholdedSample {
    Matrix features;          // n_u x d, in [0,1]
    Matrix outcomes;          // n_u x 1 binary or n_u x J one-hot
    std::vector<int> levels;  // ordinal levels (1..J) when the follow-up is ordinal
    double threshold = 0.0;
    std::size_t retained = 0;
    ScalingParams scaling;
    double quantile = 0.0;
    int categories = 1;
};

std::pair<Matrix, ScalingParams> scale_features(const Matrix& x);

// Apply a fitted scaling to new rows; values outside the training range are
// clipped to [0,1] and counted in *clipped if provided.
Matrix apply_scaling(const ScalingParams& params, const Matrix& x,
                     std::size_t* clipped = nullptr);
Matrix invert_scaling(const ScalingParams& params, const Matrix& scaled);

// The ceil(q*n)-th order statistic of y; ties kept as-is.
double empirical_threshold(const std::vector<double>& y, double q);

// Row-wise min across triggers, reducing the multi-trigger case to a scalar
// trigger. (The docs note the tension between this reduction and the union
// event; see docs/SCHEMAS.md.)
std::vector<double> reduce_multi_trigger(const Matrix& triggers);

std::vector<double> continuous_to_indicator(const std::vector<double>& z,
                                            double u);

// flag_i = 1 iff z_i > y_i (extremal probabilistic index follow-up).
std::vector<double> exceedance_indicator_pi(const std::vector<double>& z,
                                            const std::vector<double>& y);

ThresholdedSample build_threshold_sample(const RawDataset& raw, double q);

}  // namespace poc
