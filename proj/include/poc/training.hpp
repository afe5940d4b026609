#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "poc/data.hpp"
#include "poc/network.hpp"

namespace poc {

// How the step length along the quasi-Newton direction is chosen. Fixed
// unit steps match the common machine-learning LBFGS protocol and act as
// the implicit regularizer behind the reference study results; the strong
// Wolfe search drives the loss to a full minimum.
enum class StepMode { FixedStep, StrongWolfe };

struct FitConfig {
    int max_iterations = 100;
    int history_size = 10;
    double gradient_tolerance = 1e-8;
    StepMode step_mode = StepMode::FixedStep;
    double learning_rate = 0.03;  // FixedStep only
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    std::uint64_t init_seed = 1;
    LossKind loss = LossKind::BinaryCE;

    std::string to_document() const;
    static FitConfig from_document(const std::string& text);
};

struct FitReport {
    double final_loss = 0.0;
    std::vector<double> loss_trace;  // loss after each accepted iterate
    int iterations = 0;
    bool converged = false;
    int fallback_steps = 0;  // line-search failures recovered by backtracking
    double seconds = 0.0;

    std::string to_document() const;
};

struct PocEstimate {
    KaneNetwork net;
    int feature_dim = 0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    FitReport report;
};

// Full-batch limited-memory quasi-Newton fit of the coefficient tensors,
// from the seeded random initialization. Returns the best-loss iterate.
PocEstimate fit(const ThresholdedSample& data, const std::vector<int>& widths,
                const SplineSpec& spec, GLayer g, const FitConfig& config);

// Generic driver over (loss, gradient) callbacks; used by fit and tests.
struct LbfgsResult {
    std::vector<double> best_x;
    double best_loss = 0.0;
    std::vector<double> loss_trace;
    int iterations = 0;
    bool converged = false;
    int fallback_steps = 0;
};
LbfgsResult lbfgs_minimize(
    const std::vector<double>& x0,
    const std::function<double(const std::vector<double>&, std::vector<double>&)>&
        value_and_gradient,
    const FitConfig& config);

}  // namespace poc
