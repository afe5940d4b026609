#include "poc/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poc {

std::pair<Matrix, ScalingParams> scale_features(const Matrix& x) {
    if (x.rows == 0 || x.cols == 0)
        throw std::invalid_argument("cannot scale an empty feature matrix");
    ScalingParams params;
    params.min.resize(x.cols);
    params.max.resize(x.cols);
    params.constant.resize(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
        double lo = x(0, j), hi = x(0, j);
        for (std::size_t i = 1; i < x.rows; ++i) {
            lo = std::min(lo, x(i, j));
            hi = std::max(hi, x(i, j));
        }
        params.min[j] = lo;
        params.max[j] = hi;
        params.constant[j] = !(hi > lo);
    }
    return {apply_scaling(params, x), params};
}

Matrix apply_scaling(const ScalingParams& params, const Matrix& x,
                     std::size_t* clipped) {
    if (x.cols != params.min.size())
        throw std::invalid_argument("scaling dimension mismatch");
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            if (params.constant[j]) {
                out(i, j) = 0.5;
                continue;
            }
            double v = (x(i, j) - params.min[j]) / (params.max[j] - params.min[j]);
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                if (clipped) ++*clipped;
            }
            out(i, j) = v;
        }
    }
    return out;
}

Matrix invert_scaling(const ScalingParams& params, const Matrix& scaled) {
    if (scaled.cols != params.min.size())
        throw std::invalid_argument("scaling dimension mismatch");
    Matrix out(scaled.rows, scaled.cols);
    for (std::size_t i = 0; i < scaled.rows; ++i) {
        for (std::size_t j = 0; j < scaled.cols; ++j) {
            out(i, j) = params.constant[j]
                            ? params.min[j]
                            : params.min[j] +
                                  scaled(i, j) * (params.max[j] - params.min[j]);
        }
    }
    return out;
}

double empirical_threshold(const std::vector<double>& y, double q) {
    if (y.size() < 20)
        throw std::invalid_argument("need at least 20 observations to threshold");
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("quantile level must be in (0,1)");
    const auto n = y.size();
    const auto rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(n)));  // 1-based order statistic
    std::vector<double> sorted(y);
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::vector<double> reduce_multi_trigger(const Matrix& triggers) {
    if (triggers.cols < 1)
        throw std::invalid_argument("need at least one trigger column");
    std::vector<double> out(triggers.rows);
    for (std::size_t i = 0; i < triggers.rows; ++i) {
        double v = triggers(i, 0);
        for (std::size_t j = 1; j < triggers.cols; ++j)
            v = std::min(v, triggers(i, j));
        // Infinities are legal: monotone transforms of heavy-tailed triggers
        // can overflow, and order statistics still behave. NaN is not.
        if (std::isnan(v))
            throw std::invalid_argument("NaN trigger value at row " +
                                        std::to_string(i));
        out[i] = v;
    }
    return out;
}

std::vector<double> continuous_to_indicator(const std::vector<double>& z,
                                            double u) {
    std::vector<double> flags(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) flags[i] = z[i] > u ? 1.0 : 0.0;
    return flags;
}

std::vector<double> exceedance_indicator_pi(const std::vector<double>& z,
                                            const std::vector<double>& y) {
    if (z.size() != y.size())
        throw std::invalid_argument("indicator length mismatch");
    std::vector<double> flags(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) flags[i] = z[i] > y[i] ? 1.0 : 0.0;
    return flags;
}

ThresholdedSample build_threshold_sample(const RawDataset& raw, double q) {
    const std::size_t n = raw.features.rows;
    if (raw.triggers.rows != n || raw.followup.rows != n)
        throw std::invalid_argument("raw dataset row counts disagree");

    const std::vector<double> trigger = reduce_multi_trigger(raw.triggers);
    const double u = empirical_threshold(trigger, q);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; ++i) {
        if (trigger[i] > u) keep.push_back(i);
    }
    if (keep.size() < 25) {
        throw std::runtime_error(
            "only " + std::to_string(keep.size()) +
            " exceedances retained; lower q or collect more data (floor is 25)");
    }

    ThresholdedSample sample;
    sample.threshold = u;
    sample.quantile = q;
    sample.retained = keep.size();
    sample.categories = raw.categories;

    Matrix rows(keep.size(), raw.features.cols);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        for (std::size_t j = 0; j < raw.features.cols; ++j)
            rows(r, j) = raw.features(keep[r], j);
    }
    auto [scaled, params] = scale_features(rows);
    sample.features = std::move(scaled);
    sample.scaling = std::move(params);

    switch (raw.kind) {
        case FollowupKind::Binary: {
            sample.outcomes = Matrix(keep.size(), 1);
            for (std::size_t r = 0; r < keep.size(); ++r) {
                const double d = raw.followup(keep[r], 0);
                if (d != 0.0 && d != 1.0)
                    throw std::invalid_argument("binary follow-up must be 0/1");
                sample.outcomes(r, 0) = d;
            }
            break;
        }
        case FollowupKind::Categorical: {
            if (raw.followup.cols != static_cast<std::size_t>(raw.categories))
                throw std::invalid_argument("one-hot width must equal categories");
            sample.outcomes = Matrix(keep.size(), raw.followup.cols);
            for (std::size_t r = 0; r < keep.size(); ++r) {
                for (std::size_t j = 0; j < raw.followup.cols; ++j)
                    sample.outcomes(r, j) = raw.followup(keep[r], j);
            }
            break;
        }
        case FollowupKind::Ordinal: {
            const int J = raw.categories;
            if (J < 2) throw std::invalid_argument("ordinal needs J >= 2");
            sample.outcomes = Matrix(keep.size(), static_cast<std::size_t>(J));
            sample.levels.resize(keep.size());
            for (std::size_t r = 0; r < keep.size(); ++r) {
                const double lv = raw.followup(keep[r], 0);
                const int level = static_cast<int>(lv);
                if (lv != level || level < 1 || level > J)
                    throw std::invalid_argument("ordinal level out of 1..J");
                sample.levels[r] = level;
                sample.outcomes(r, static_cast<std::size_t>(level - 1)) = 1.0;
            }
            break;
        }
        case FollowupKind::Continuous: {
            // I(Z > u) with the trigger threshold, the conditional extremal
            // dependence construction.
            sample.outcomes = Matrix(keep.size(), 1);
            for (std::size_t r = 0; r < keep.size(); ++r) {
                sample.outcomes(r, 0) = raw.followup(keep[r], 0) > u ? 1.0 : 0.0;
            }
            break;
        }
    }
    return sample;
}

}  // namespace poc
