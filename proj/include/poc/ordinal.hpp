#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "poc/data.hpp"
#include "poc/training.hpp"

namespace poc {

// Frank-Hall decomposition: a J-class ordinal follow-up becomes J-1 binary
// fits of the cumulative attributes A > C_j, recombined by differencing.
// Sub-models with a degenerate label vector fall back to the constant
// empirical rate.
struct OrdinalSubModel {
    std::optional<PocEstimate> estimate;  // empty when the fallback is used
    double constant_rate = 0.0;
    bool degenerate = false;

    double evaluate(std::span<const double> x) const;
};

struct OrdinalModel {
    int categories = 0;  // J
    std::vector<OrdinalSubModel> sub_models;  // J-1 entries, ordered by j
    double threshold = 0.0;
    int feature_dim = 0;

    std::string to_document() const;
    static OrdinalModel from_document(const std::string& text);
};

// flag = 1 iff level > j, for levels in 1..J.
std::vector<double> make_cumulative_labels(const std::vector<int>& levels,
                                           int j, int categories);

// Project onto the monotone non-increasing cone (pool adjacent violators).
std::vector<double> isotonic_non_increasing(std::vector<double> v);

OrdinalModel fit_ordinal(const ThresholdedSample& data,
                         const std::vector<int>& widths, const SplineSpec& spec,
                         const FitConfig& config);

// Category probabilities at x: telescoped differences of the cumulative
// probabilities after the isotonic repair; always a valid simplex point.
std::vector<double> ordinal_category_probs(const OrdinalModel& model,
                                           std::span<const double> x);

// Differencing applied to raw cumulative probabilities (exposed for tests).
std::vector<double> frank_hall_probs(std::vector<double> cumulative);

}  // namespace poc
