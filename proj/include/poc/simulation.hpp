#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "poc/data.hpp"
#include "poc/matrix.hpp"
#include "poc/rng.hpp"
#include "poc/training.hpp"

namespace poc {

// The named artificial-data scenarios: A1/A2 have one feature, B1/B2 two
// features, C two features with three outcome categories.
enum class ScenarioId { A1, A2, B1, B2, C };

ScenarioId scenario_from_name(const std::string& name);
std::string scenario_name(ScenarioId id);
int scenario_dim(ScenarioId id);
int scenario_categories(ScenarioId id);  // 1 for binary, 3 for C

// Unit Frechet draw, distribution function exp(-1/y).
double frechet_sample(Rng& rng);

// Finite-u success probability of the follow-up event (length 1, or 3 for
// Scenario C where the triple is normalized to the simplex). Values are
// clamped to [0,1]; *clamped counts how often the clamp fired.
std::vector<double> scenario_probability(ScenarioId id,
                                         std::span<const double> x, double u,
                                         std::size_t* clamped = nullptr);

// The u -> infinity limit: the true POC surface.
std::vector<double> true_poc(ScenarioId id, std::span<const double> x);

struct ScenarioDraw {
    RawDataset raw;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double threshold = 0.0;  // empirical q-quantile used when drawing outcomes
};

// Features uniform on the cube, unit Frechet trigger; outcomes drawn only
// for rows whose trigger exceeds the empirical q-quantile.
ScenarioDraw generate(ScenarioId id, std::size_t n, std::uint64_t seed,
                      double q = 0.95);

// Uniform evaluation grid on [0,1]^d: 1001 points for d=1, 101x101 for d=2.
Matrix evaluation_grid(int d);

// Trapezoid-rule integral of the squared difference between two functions
// sampled on the uniform grid (columns of a and b are categories).
std::vector<double> mise(const Matrix& grid, const Matrix& estimate,
                         const Matrix& truth, int d);

struct ReplicateRecord {
    int replicate = 0;
    std::uint64_t seed = 0;
    std::size_t retained = 0;
    double final_loss = 0.0;
    std::vector<double> mise;  // per category
    bool ok = true;
    std::string error;
};

struct StudySummary {
    ScenarioId scenario;
    std::size_t n = 0;
    int replicates = 0;
    int failures = 0;
    std::vector<double> mean_mise;        // mean over replicates, per category
    std::vector<double> median_mise;      // median over replicates
    std::vector<double> mean_curve_mise;  // ISE of the pointwise mean estimate
    Matrix grid;
    Matrix truth;
    Matrix mean_estimate;
    std::vector<ReplicateRecord> records;
};

// M independent generate -> threshold -> fit -> mise runs with seeds
// base_seed + r; replicate failures are recorded, not fatal. Replicates may
// run on several threads; results are merged in replicate order.
StudySummary monte_carlo(ScenarioId id, std::size_t n, int replicates,
                         std::uint64_t base_seed, const FitConfig& config,
                         int threads = 1, double q = 0.95);

// One scenario fit with the canonical architecture (p=3, m=2 defaults).
PocEstimate fit_scenario(ScenarioId id, const ThresholdedSample& sample,
                         const FitConfig& config);

}  // namespace poc
