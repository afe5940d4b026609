#include "poc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "poc/normal.hpp"

namespace poc {

namespace {
constexpr double kPi = std::numbers::pi;

// Decorrelates the optimizer's init stream from the data stream.
std::uint64_t mix_seed(std::uint64_t s) {
    s += 0x9E3779B97F4A7C15ull;
    s = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9ull;
    s = (s ^ (s >> 27)) * 0x94D049BB133111EBull;
    return s ^ (s >> 31);
}
}  // namespace

ScenarioId scenario_from_name(const std::string& name) {
    if (name == "A1") return ScenarioId::A1;
    if (name == "A2") return ScenarioId::A2;
    if (name == "B1") return ScenarioId::B1;
    if (name == "B2") return ScenarioId::B2;
    if (name == "C") return ScenarioId::C;
    throw std::invalid_argument("unknown scenario: " + name);
}

std::string scenario_name(ScenarioId id) {
    switch (id) {
        case ScenarioId::A1: return "A1";
        case ScenarioId::A2: return "A2";
        case ScenarioId::B1: return "B1";
        case ScenarioId::B2: return "B2";
        case ScenarioId::C: return "C";
    }
    return "?";
}

int scenario_dim(ScenarioId id) {
    return (id == ScenarioId::A1 || id == ScenarioId::A2) ? 1 : 2;
}

int scenario_categories(ScenarioId id) { return id == ScenarioId::C ? 3 : 1; }

double frechet_sample(Rng& rng) { return -1.0 / std::log(rng.uniform()); }

namespace {

double clamp01(double v, std::size_t* clamped) {
    if (v < 0.0 || v > 1.0) {
        if (clamped) ++*clamped;
        return std::clamp(v, 0.0, 1.0);
    }
    return v;
}

double m_a1(double x, double shift) { return normal_cdf(x - shift); }
double m_a2(double x, double bump) {
    return 0.2 * std::sin(3.0 * kPi * (x - 1.0) * (x - 1.0)) + 0.4 + bump;
}
double m_b1(double x1, double x2, double shift) {
    return normal_cdf(x1 - shift) * normal_cdf(x2 - shift);
}
double m_b2(double x1, double x2, double bump) {
    return 0.4 * std::exp(-x1) * std::cos(2.0 * kPi * x2) + 0.5 + bump;
}
double m_c3(double x1, double x2, double bump) {
    const double s = std::sin(kPi * x1);
    return 0.8 * x2 * s * s + bump;
}

}  // namespace

std::vector<double> scenario_probability(ScenarioId id,
                                         std::span<const double> x, double u,
                                         std::size_t* clamped) {
    if (static_cast<int>(x.size()) != scenario_dim(id))
        throw std::invalid_argument("feature dimension mismatch for scenario");
    if (!(u > 0.0)) throw std::invalid_argument("threshold must be positive");
    const double shift = std::exp(-u);
    const double bump = 1.0 / (u * u);
    switch (id) {
        case ScenarioId::A1:
            return {clamp01(m_a1(x[0], shift), clamped)};
        case ScenarioId::A2:
            return {clamp01(m_a2(x[0], bump), clamped)};
        case ScenarioId::B1:
            return {clamp01(m_b1(x[0], x[1], shift), clamped)};
        case ScenarioId::B2:
            return {clamp01(m_b2(x[0], x[1], bump), clamped)};
        case ScenarioId::C: {
            const double m1 = clamp01(m_b1(x[0], x[1], shift), clamped);
            const double m2 = clamp01(m_b2(x[0], x[1], bump), clamped);
            const double m3 = clamp01(m_c3(x[0], x[1], bump), clamped);
            const double total = m1 + m2 + m3;
            return {m1 / total, m2 / total, m3 / total};
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<double> true_poc(ScenarioId id, std::span<const double> x) {
    if (static_cast<int>(x.size()) != scenario_dim(id))
        throw std::invalid_argument("feature dimension mismatch for scenario");
    switch (id) {
        case ScenarioId::A1:
            return {normal_cdf(x[0])};
        case ScenarioId::A2:
            return {m_a2(x[0], 0.0)};
        case ScenarioId::B1:
            return {m_b1(x[0], x[1], 0.0)};
        case ScenarioId::B2:
            return {m_b2(x[0], x[1], 0.0)};
        case ScenarioId::C: {
            const double m1 = m_b1(x[0], x[1], 0.0);
            const double m2 = m_b2(x[0], x[1], 0.0);
            const double m3 = m_c3(x[0], x[1], 0.0);
            const double total = m1 + m2 + m3;
            return {m1 / total, m2 / total, m3 / total};
        }
    }
    throw std::logic_error("unreachable");
}

ScenarioDraw generate(ScenarioId id, std::size_t n, std::uint64_t seed,
                      double q) {
    const int d = scenario_dim(id);
    const int J = scenario_categories(id);
    Rng rng(seed);

    ScenarioDraw draw;
    draw.seed = seed;
    draw.n = n;
    draw.raw.features = Matrix(n, static_cast<std::size_t>(d));
    draw.raw.triggers = Matrix(n, 1);
    std::vector<double> trigger(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            draw.raw.features(i, static_cast<std::size_t>(j)) = rng.uniform();
        trigger[i] = frechet_sample(rng);
        draw.raw.triggers(i, 0) = trigger[i];
    }
    const double u = empirical_threshold(trigger, q);
    draw.threshold = u;

    if (J == 1) {
        draw.raw.kind = FollowupKind::Binary;
        draw.raw.followup = Matrix(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (trigger[i] <= u) continue;  // outcome never enters D_n
            const auto p = scenario_probability(
                id, std::span<const double>(draw.raw.features.row(i),
                                            static_cast<std::size_t>(d)),
                u);
            draw.raw.followup(i, 0) = rng.bernoulli(p[0]) ? 1.0 : 0.0;
        }
    } else {
        draw.raw.kind = FollowupKind::Categorical;
        draw.raw.categories = J;
        draw.raw.followup = Matrix(n, static_cast<std::size_t>(J));
        for (std::size_t i = 0; i < n; ++i) {
            if (trigger[i] <= u) {
                draw.raw.followup(i, 0) = 1.0;  // placeholder, never used
                continue;
            }
            const auto p = scenario_probability(
                id, std::span<const double>(draw.raw.features.row(i),
                                            static_cast<std::size_t>(d)),
                u);
            const double v = rng.uniform();
            double acc = 0.0;
            std::size_t cat = static_cast<std::size_t>(J) - 1;
            for (std::size_t j = 0; j < p.size(); ++j) {
                acc += p[j];
                if (v < acc) {
                    cat = j;
                    break;
                }
            }
            draw.raw.followup(i, cat) = 1.0;
        }
    }
    return draw;
}

Matrix evaluation_grid(int d) {
    if (d == 1) {
        Matrix grid(1001, 1);
        for (std::size_t i = 0; i < 1001; ++i)
            grid(i, 0) = static_cast<double>(i) / 1000.0;
        return grid;
    }
    if (d == 2) {
        Matrix grid(101 * 101, 2);
        std::size_t r = 0;
        for (std::size_t i = 0; i < 101; ++i) {
            for (std::size_t j = 0; j < 101; ++j, ++r) {
                grid(r, 0) = static_cast<double>(i) / 100.0;
                grid(r, 1) = static_cast<double>(j) / 100.0;
            }
        }
        return grid;
    }
    throw std::invalid_argument("evaluation grid supports d in {1,2}");
}

std::vector<double> mise(const Matrix& grid, const Matrix& estimate,
                         const Matrix& truth, int d) {
    if (estimate.rows != grid.rows || truth.rows != grid.rows ||
        estimate.cols != truth.cols) {
        throw std::invalid_argument("mise shape mismatch");
    }
    const std::size_t side = d == 1 ? grid.rows : 101;
    auto weight1d = [&](std::size_t i) {
        return (i == 0 || i + 1 == side) ? 0.5 : 1.0;
    };
    const double cell = d == 1
                            ? 1.0 / static_cast<double>(side - 1)
                            : 1.0 / static_cast<double>((side - 1) * (side - 1));
    std::vector<double> out(estimate.cols, 0.0);
    for (std::size_t r = 0; r < grid.rows; ++r) {
        double w;
        if (d == 1) {
            w = weight1d(r);
        } else {
            w = weight1d(r / side) * weight1d(r % side);
        }
        for (std::size_t j = 0; j < estimate.cols; ++j) {
            const double e = estimate(r, j) - truth(r, j);
            out[j] += w * e * e;
        }
    }
    for (double& v : out) v *= cell;
    return out;
}

PocEstimate fit_scenario(ScenarioId id, const ThresholdedSample& sample,
                         const FitConfig& config) {
    const int d = scenario_dim(id);
    const int J = scenario_categories(id);
    const SplineSpec spec(3, 2);
    const auto widths = KaneNetwork::canonical_widths(d, J);
    const GLayer g = J == 1 ? GLayer::sigmoid() : GLayer::softmax(J);
    FitConfig cfg = config;
    cfg.loss = J == 1 ? LossKind::BinaryCE : LossKind::MultiCE;
    return fit(sample, widths, spec, g, cfg);
}

StudySummary monte_carlo(ScenarioId id, std::size_t n, int replicates,
                         std::uint64_t base_seed, const FitConfig& config,
                         int threads, double q) {
    if (replicates < 1) throw std::invalid_argument("need at least 1 replicate");
    const int d = scenario_dim(id);
    const int J = scenario_categories(id);

    StudySummary summary;
    summary.scenario = id;
    summary.n = n;
    summary.replicates = replicates;
    summary.grid = evaluation_grid(d);
    summary.truth = Matrix(summary.grid.rows, static_cast<std::size_t>(J));
    for (std::size_t r = 0; r < summary.grid.rows; ++r) {
        const auto t = true_poc(
            id, std::span<const double>(summary.grid.row(r), summary.grid.cols));
        std::copy(t.begin(), t.end(), summary.truth.row(r));
    }

    summary.records.resize(static_cast<std::size_t>(replicates));
    std::vector<Matrix> estimates(static_cast<std::size_t>(replicates));

    auto run_one = [&](int r) {
        ReplicateRecord& rec = summary.records[static_cast<std::size_t>(r)];
        rec.replicate = r;
        rec.seed = base_seed + static_cast<std::uint64_t>(r);
        try {
            const ScenarioDraw draw = generate(id, n, rec.seed, q);
            const ThresholdedSample sample = build_threshold_sample(draw.raw, q);
            rec.retained = sample.retained;
            FitConfig cfg = config;
            cfg.init_seed = mix_seed(rec.seed);
            const PocEstimate est = fit_scenario(id, sample, cfg);
            rec.final_loss = est.report.final_loss;
            const Matrix scaled_grid = apply_scaling(sample.scaling, summary.grid);
            Matrix pred = est.net.forward_batch(scaled_grid);
            rec.mise = mise(summary.grid, pred, summary.truth, d);
            estimates[static_cast<std::size_t>(r)] = std::move(pred);
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
    };

    if (threads <= 1) {
        for (int r = 0; r < replicates; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        const int t_count = std::min(threads, replicates);
        for (int t = 0; t < t_count; ++t) {
            pool.emplace_back([&, t]() {
                for (int r = t; r < replicates; r += t_count) run_one(r);
            });
        }
        for (auto& th : pool) th.join();
    }

    // Aggregate in replicate-index order.
    summary.mean_estimate = Matrix(summary.grid.rows, static_cast<std::size_t>(J));
    std::vector<std::vector<double>> per_cat(static_cast<std::size_t>(J));
    int ok_count = 0;
    for (int r = 0; r < replicates; ++r) {
        const auto& rec = summary.records[static_cast<std::size_t>(r)];
        if (!rec.ok) {
            ++summary.failures;
            continue;
        }
        ++ok_count;
        const Matrix& est = estimates[static_cast<std::size_t>(r)];
        for (std::size_t i = 0; i < est.data.size(); ++i)
            summary.mean_estimate.data[i] += est.data[i];
        for (int j = 0; j < J; ++j)
            per_cat[static_cast<std::size_t>(j)].push_back(
                rec.mise[static_cast<std::size_t>(j)]);
    }
    if (ok_count == 0) throw std::runtime_error("every replicate failed");
    for (double& v : summary.mean_estimate.data)
        v /= static_cast<double>(ok_count);

    summary.mean_curve_mise =
        mise(summary.grid, summary.mean_estimate, summary.truth, d);
    summary.mean_mise.resize(static_cast<std::size_t>(J));
    summary.median_mise.resize(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        auto& v = per_cat[static_cast<std::size_t>(j)];
        double total = 0.0;
        for (double m : v) total += m;
        summary.mean_mise[static_cast<std::size_t>(j)] =
            total / static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        const std::size_t mid = v.size() / 2;
        summary.median_mise[static_cast<std::size_t>(j)] =
            v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    }
    return summary;
}

}  // namespace poc
