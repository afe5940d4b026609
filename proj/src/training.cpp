#include "poc/training.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <json.hpp>

#include "poc/kernels.hpp"

namespace poc {

namespace {

using Objective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;

double norm2(const std::vector<double>& v) {
    return std::sqrt(kernels::dot(v.data(), v.data(), v.size()));
}

struct LineSearchResult {
    bool ok = false;
    double step = 0.0;
    double f = 0.0;
    std::vector<double> g;
    std::vector<double> x;
};

// Strong Wolfe line search (bracket then zoom with bisection/interpolation).
LineSearchResult strong_wolfe(const Objective& eval,
                              const std::vector<double>& x0, double f0,
                              const std::vector<double>& g0,
                              const std::vector<double>& dir, double c1,
                              double c2) {
    const std::size_t n = x0.size();
    const double dphi0 = kernels::dot(g0.data(), dir.data(), n);
    LineSearchResult res;
    if (dphi0 >= 0.0) return res;

    std::vector<double> x(n), g(n);
    auto phi = [&](double a, double& dphi) {
        x = x0;
        kernels::axpy(a, dir.data(), x.data(), n);
        const double f = eval(x, g);
        dphi = kernels::dot(g.data(), dir.data(), n);
        return f;
    };
    auto accept = [&](double a, double f) {
        res.ok = true;
        res.step = a;
        res.f = f;
        res.g = g;
        res.x = x;
    };

    const double a_max = 1e4;
    double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
    double a = 1.0;
    double lo = 0.0, hi = 0.0, f_lo = f0, dphi_lo = dphi0;
    bool bracketed = false;

    for (int i = 0; i < 20 && !bracketed; ++i) {
        double dphi;
        const double f = phi(a, dphi);
        if (!std::isfinite(f) || f > f0 + c1 * a * dphi0 ||
            (i > 0 && f >= f_prev)) {
            lo = a_prev; f_lo = f_prev; dphi_lo = dphi_prev; hi = a;
            bracketed = true;
            break;
        }
        if (std::abs(dphi) <= -c2 * dphi0) {
            accept(a, f);
            return res;
        }
        if (dphi >= 0.0) {
            lo = a; f_lo = f; dphi_lo = dphi; hi = a_prev;
            bracketed = true;
            break;
        }
        a_prev = a; f_prev = f; dphi_prev = dphi;
        a = std::min(2.0 * a, a_max);
        if (a >= a_max) return res;
    }
    if (!bracketed) return res;

    for (int i = 0; i < 30; ++i) {
        // Quadratic interpolation using (lo, f_lo, dphi_lo) safeguarded by
        // bisection.
        double a_trial = 0.5 * (lo + hi);
        double dphi;
        const double f = phi(a_trial, dphi);
        if (!std::isfinite(f) || f > f0 + c1 * a_trial * dphi0 || f >= f_lo) {
            hi = a_trial;
        } else {
            if (std::abs(dphi) <= -c2 * dphi0) {
                accept(a_trial, f);
                return res;
            }
            if (dphi * (hi - lo) >= 0.0) hi = lo;
            lo = a_trial; f_lo = f; dphi_lo = dphi;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    (void)dphi_lo;
    return res;
}

// Armijo backtracking along the steepest descent direction; the recovery
// path when the Wolfe search fails.
LineSearchResult backtracking(const Objective& eval,
                              const std::vector<double>& x0, double f0,
                              const std::vector<double>& g0, double c1) {
    const std::size_t n = x0.size();
    std::vector<double> dir(n);
    for (std::size_t i = 0; i < n; ++i) dir[i] = -g0[i];
    const double dphi0 = -kernels::dot(g0.data(), g0.data(), n);
    LineSearchResult res;
    double a = 1.0;
    std::vector<double> x(n);
    res.g.resize(n);
    for (int i = 0; i < 50; ++i) {
        x = x0;
        kernels::axpy(a, dir.data(), x.data(), n);
        const double f = eval(x, res.g);
        if (std::isfinite(f) && f <= f0 + c1 * a * dphi0) {
            res.ok = true;
            res.step = a;
            res.f = f;
            res.x = x;
            return res;
        }
        a *= 0.5;
    }
    return res;
}

}  // namespace

LbfgsResult lbfgs_minimize(const std::vector<double>& x0,
                           const Objective& value_and_gradient,
                           const FitConfig& config) {
    if (config.max_iterations < 1)
        throw std::invalid_argument("max_iterations must be >= 1");
    if (!(config.gradient_tolerance > 0.0))
        throw std::invalid_argument("gradient_tolerance must be positive");

    const std::size_t n = x0.size();
    std::vector<double> x = x0;
    std::vector<double> g(n);
    double f = value_and_gradient(x, g);
    if (!std::isfinite(f))
        throw std::runtime_error("non-finite loss at initialization");

    LbfgsResult result;
    result.best_x = x;
    result.best_loss = f;
    result.loss_trace.push_back(f);

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> dir(n), q(n);
    std::vector<double> alpha_buf;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        if (norm2(g) < config.gradient_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        q = g;
        const std::size_t h = s_hist.size();
        alpha_buf.assign(h, 0.0);
        for (std::size_t i = h; i-- > 0;) {
            const double a =
                rho_hist[i] * kernels::dot(s_hist[i].data(), q.data(), n);
            alpha_buf[i] = a;
            kernels::axpy(-a, y_hist[i].data(), q.data(), n);
        }
        if (h > 0) {
            const auto& s = s_hist.back();
            const auto& y = y_hist.back();
            const double gamma = kernels::dot(s.data(), y.data(), n) /
                                 kernels::dot(y.data(), y.data(), n);
            kernels::scale(q.data(), gamma, n);
        }
        for (std::size_t i = 0; i < h; ++i) {
            const double b =
                rho_hist[i] * kernels::dot(y_hist[i].data(), q.data(), n);
            kernels::axpy(alpha_buf[i] - b, s_hist[i].data(), q.data(), n);
        }
        for (std::size_t i = 0; i < n; ++i) dir[i] = -q[i];
        bool dir_ok = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(dir[i])) { dir_ok = false; break; }
        if (!dir_ok) break;  // curvature info degenerated; keep best iterate

        LineSearchResult ls;
        if (config.step_mode == StepMode::FixedStep) {
            // Unit step along the quasi-Newton direction, halved only to
            // escape a non-finite loss.
            double a = config.learning_rate;
            ls.g.resize(n);
            for (int attempt = 0; attempt < 40; ++attempt) {
                ls.x = x;
                kernels::axpy(a, dir.data(), ls.x.data(), n);
                ls.f = value_and_gradient(ls.x, ls.g);
                if (std::isfinite(ls.f)) {
                    ls.ok = true;
                    ls.step = a;
                    break;
                }
                a *= 0.5;
            }
            if (!ls.ok) break;
        } else {
            ls = strong_wolfe(value_and_gradient, x, f, g, dir, config.wolfe_c1,
                              config.wolfe_c2);
            if (!ls.ok) {
                ls = backtracking(value_and_gradient, x, f, g, config.wolfe_c1);
                ++result.fallback_steps;
                if (!ls.ok) break;  // no further progress possible
            }
        }

        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = ls.x[i] - x[i];
            y[i] = ls.g[i] - g[i];
        }
        const double sy = kernels::dot(s.data(), y.data(), n);
        if (sy > 1e-10 * norm2(s) * norm2(y)) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > config.history_size) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        x = std::move(ls.x);
        g = std::move(ls.g);
        f = ls.f;
        result.loss_trace.push_back(f);
        ++result.iterations;
        if (f < result.best_loss) {
            result.best_loss = f;
            result.best_x = x;
        }
    }
    if (!result.converged && norm2(g) < config.gradient_tolerance)
        result.converged = true;
    return result;
}

PocEstimate fit(const ThresholdedSample& data, const std::vector<int>& widths,
                const SplineSpec& spec, GLayer g, const FitConfig& config) {
    if (data.features.rows == 0)
        throw std::invalid_argument("cannot fit on an empty sample");
    if (widths.empty() || static_cast<std::size_t>(widths.front()) != data.features.cols)
        throw std::invalid_argument("first width must equal feature dimension");

    const auto start = std::chrono::steady_clock::now();
    KaneNetwork net(widths, spec, g);
    net.init_random(config.init_seed);

    std::vector<double> x0(net.parameter_count());
    net.parameters_to(x0);

    KaneNetwork work = net;
    auto objective = [&](const std::vector<double>& theta,
                         std::vector<double>& grad) -> double {
        work.parameters_from(theta);
        LossGradient lg =
            loss_and_gradient(work, data.features, data.outcomes, config.loss);
        grad.resize(theta.size());
        std::size_t pos = 0;
        for (const auto& layer : lg.grads) {
            std::copy(layer.beta.begin(), layer.beta.end(), grad.begin() + pos);
            pos += layer.beta.size();
        }
        return lg.loss;
    };

    LbfgsResult opt = lbfgs_minimize(x0, objective, config);
    net.parameters_from(opt.best_x);

    PocEstimate estimate{std::move(net), static_cast<int>(data.features.cols),
                         data.threshold, config.init_seed, {}};
    estimate.report.final_loss = opt.best_loss;
    estimate.report.loss_trace = std::move(opt.loss_trace);
    estimate.report.iterations = opt.iterations;
    estimate.report.converged = opt.converged;
    estimate.report.fallback_steps = opt.fallback_steps;
    estimate.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return estimate;
}

std::string FitConfig::to_document() const {
    nlohmann::json doc;
    doc["max_iterations"] = max_iterations;
    doc["history_size"] = history_size;
    doc["gradient_tolerance"] = gradient_tolerance;
    doc["step_mode"] = step_mode == StepMode::FixedStep ? "fixed" : "wolfe";
    doc["learning_rate"] = learning_rate;
    doc["wolfe_c1"] = wolfe_c1;
    doc["wolfe_c2"] = wolfe_c2;
    doc["init_seed"] = init_seed;
    doc["loss"] = loss == LossKind::BinaryCE ? "binary_ce" : "multi_ce";
    return doc.dump(2);
}

FitConfig FitConfig::from_document(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    FitConfig c;
    c.max_iterations = doc.value("max_iterations", c.max_iterations);
    c.history_size = doc.value("history_size", c.history_size);
    c.gradient_tolerance = doc.value("gradient_tolerance", c.gradient_tolerance);
    const std::string mode = doc.value("step_mode", std::string("fixed"));
    if (mode == "fixed") c.step_mode = StepMode::FixedStep;
    else if (mode == "wolfe") c.step_mode = StepMode::StrongWolfe;
    else throw std::invalid_argument("unknown step_mode: " + mode);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.wolfe_c1 = doc.value("wolfe_c1", c.wolfe_c1);
    c.wolfe_c2 = doc.value("wolfe_c2", c.wolfe_c2);
    c.init_seed = doc.value("init_seed", c.init_seed);
    const std::string loss_name = doc.value("loss", std::string("binary_ce"));
    if (loss_name == "binary_ce") c.loss = LossKind::BinaryCE;
    else if (loss_name == "multi_ce") c.loss = LossKind::MultiCE;
    else throw std::invalid_argument("unknown loss kind: " + loss_name);
    if (c.max_iterations < 1)
        throw std::invalid_argument("max_iterations must be >= 1");
    return c;
}

std::string FitReport::to_document() const {
    nlohmann::json doc;
    doc["final_loss"] = final_loss;
    doc["iterations"] = iterations;
    doc["converged"] = converged;
    doc["fallback_steps"] = fallback_steps;
    doc["seconds"] = seconds;
    doc["loss_trace"] = loss_trace;
    return doc.dump(2);
}

}  // namespace poc
