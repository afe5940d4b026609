#include "poc/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "poc/kernels.hpp"
#include "poc/rng.hpp"

namespace poc {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

void check_unit_cube(std::span<const double> x) {
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::domain_error(
                "feature outside [0,1]; scale features before evaluation");
        }
    }
}

}  // namespace

double squash(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

double squash_derivative_from_value(double a) { return a * (1.0 - a); }

KaneNetwork::KaneNetwork(std::vector<int> widths, SplineSpec spec, GLayer g)
    : widths_(std::move(widths)), spec_(std::move(spec)), g_(g) {
    if (widths_.size() < 2)
        throw std::invalid_argument("network needs at least two layers");
    for (int w : widths_) {
        if (w < 1) throw std::invalid_argument("layer width must be positive");
    }
    if (g_.kind == GLayerKind::Softmax) {
        if (g_.categories < 2)
            throw std::invalid_argument("softmax needs at least 2 categories");
        if (widths_.back() != g_.categories)
            throw std::invalid_argument("softmax width must equal category count");
    } else if (widths_.back() != 1) {
        throw std::invalid_argument("sigmoid/identity output width must be 1");
    }
    layers_.reserve(widths_.size() - 1);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        layers_.emplace_back(widths_[l + 1], widths_[l], spec_.basis_count());
    }
}

std::vector<int> KaneNetwork::canonical_widths(int d, int output_dim,
                                               int hidden_layers) {
    std::vector<int> w;
    w.push_back(d);
    for (int i = 0; i < hidden_layers; ++i) w.push_back(2 * d + 1);
    w.push_back(output_dim);
    return w;
}

void KaneNetwork::init_random(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& layer : layers_) {
        for (double& b : layer.beta) b = 0.1 * rng.normal();
    }
}

std::size_t KaneNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer.beta.size();
    return n;
}

void KaneNetwork::parameters_to(std::span<double> out) const {
    std::size_t pos = 0;
    for (const auto& layer : layers_) {
        std::copy(layer.beta.begin(), layer.beta.end(), out.begin() + pos);
        pos += layer.beta.size();
    }
}

void KaneNetwork::parameters_from(std::span<const double> in) {
    std::size_t pos = 0;
    for (auto& layer : layers_) {
        std::copy(in.begin() + pos, in.begin() + pos + layer.beta.size(),
                  layer.beta.begin());
        pos += layer.beta.size();
    }
}

namespace {

// Per-sample forward pass keeping everything backward needs.
struct ForwardTrace {
    // activations[l]: inputs to layer l (in [0,1]); sums[l]: its raw outputs.
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> sums;
    // design[l][j]: basis row of activations[l][j].
    std::vector<std::vector<std::vector<double>>> design;
    std::vector<double> output;
};

void apply_g(const GLayer& g, std::span<const double> s,
             std::vector<double>& out) {
    out.assign(s.begin(), s.end());
    switch (g.kind) {
        case GLayerKind::Sigmoid:
            out[0] = squash(s[0]);
            break;
        case GLayerKind::Softmax: {
            const double mx = *std::max_element(s.begin(), s.end());
            double total = 0.0;
            for (std::size_t j = 0; j < out.size(); ++j) {
                out[j] = std::exp(s[j] - mx);
                total += out[j];
            }
            for (double& v : out) v /= total;
            break;
        }
        case GLayerKind::Identity:
            break;
    }
}

ForwardTrace run_forward(const KaneNetwork& net, std::span<const double> x,
                         bool keep_design) {
    check_unit_cube(x);
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("feature dimension mismatch");
    const auto& layers = net.layers();
    const int K = net.spec().basis_count();
    ForwardTrace tr;
    tr.activations.resize(layers.size());
    tr.sums.resize(layers.size());
    if (keep_design) tr.design.resize(layers.size());
    std::vector<double> current(x.begin(), x.end());
    std::vector<double> row(static_cast<std::size_t>(K));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        tr.activations[l] = current;
        std::vector<double> s(static_cast<std::size_t>(layer.out), 0.0);
        if (keep_design) {
            tr.design[l].resize(static_cast<std::size_t>(layer.in));
        }
        for (int j = 0; j < layer.in; ++j) {
            net.spec().design_row(current[static_cast<std::size_t>(j)],
                                  row.data());
            for (int i = 0; i < layer.out; ++i) {
                s[static_cast<std::size_t>(i)] += kernels::dot(
                    layer.row(i, j), row.data(), static_cast<std::size_t>(K));
            }
            if (keep_design) tr.design[l][static_cast<std::size_t>(j)] = row;
        }
        tr.sums[l] = s;
        if (l + 1 < layers.size()) {
            current.resize(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) current[i] = squash(s[i]);
        }
    }
    apply_g(net.g_layer(), tr.sums.back(), tr.output);
    return tr;
}

}  // namespace

std::vector<double> KaneNetwork::forward(std::span<const double> x) const {
    return run_forward(*this, x, false).output;
}

Matrix KaneNetwork::forward_batch(const Matrix& x) const {
    if (x.rows > 0 && static_cast<int>(x.cols) != input_dim())
        throw std::invalid_argument("feature dimension mismatch");
    Matrix out(x.rows, static_cast<std::size_t>(output_dim()));
    for (std::size_t i = 0; i < x.rows; ++i) {
        const auto y = forward(std::span<const double>(x.row(i), x.cols));
        std::copy(y.begin(), y.end(), out.row(i));
    }
    return out;
}

double bce_loss(std::span<const double> predictions,
                std::span<const double> outcomes) {
    if (predictions.empty()) throw std::invalid_argument("empty batch");
    if (predictions.size() != outcomes.size())
        throw std::invalid_argument("prediction/outcome length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double p = clamp_prob(predictions[i]);
        total += outcomes[i] * std::log(p) + (1.0 - outcomes[i]) * std::log(1.0 - p);
    }
    return -total / static_cast<double>(predictions.size());
}

double ce_loss(const Matrix& predictions, const Matrix& outcomes) {
    if (predictions.rows == 0) throw std::invalid_argument("empty batch");
    if (predictions.rows != outcomes.rows || predictions.cols != outcomes.cols)
        throw std::invalid_argument("prediction/outcome shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.rows; ++i) {
        double row_sum = 0.0;
        double hot = 0.0;
        for (std::size_t j = 0; j < predictions.cols; ++j) {
            row_sum += predictions(i, j);
            const double d = outcomes(i, j);
            if (d != 0.0 && d != 1.0)
                throw std::invalid_argument("outcomes must be one-hot");
            hot += d;
            const double p = clamp_prob(predictions(i, j));
            total += d * std::log(p) + (1.0 - d) * std::log(1.0 - p);
        }
        if (std::abs(row_sum - 1.0) > 1e-9)
            throw std::invalid_argument("prediction row not on the simplex");
        if (hot != 1.0) throw std::invalid_argument("outcomes must be one-hot");
    }
    return -total / static_cast<double>(predictions.rows);
}

LossGradient loss_and_gradient(const KaneNetwork& net, const Matrix& x,
                               const Matrix& targets, LossKind kind) {
    if (x.rows == 0) throw std::invalid_argument("empty batch");
    if (x.rows != targets.rows)
        throw std::invalid_argument("feature/target row mismatch");
    const auto& layers = net.layers();
    const int K = net.spec().basis_count();
    const double inv_n = 1.0 / static_cast<double>(x.rows);

    LossGradient result;
    result.grads.reserve(layers.size());
    for (const auto& layer : layers) {
        result.grads.emplace_back(layer.out, layer.in, layer.basis);
    }

    std::vector<double> deriv_row(static_cast<std::size_t>(K));
    for (std::size_t r = 0; r < x.rows; ++r) {
        ForwardTrace tr =
            run_forward(net, std::span<const double>(x.row(r), x.cols), true);

        // Loss contribution and dL/d(pre-output sums), already scaled by 1/n.
        std::vector<double> ds(tr.output.size());
        if (kind == LossKind::BinaryCE) {
            if (net.g_layer().kind != GLayerKind::Sigmoid)
                throw std::invalid_argument("BinaryCE requires a sigmoid g-layer");
            const double delta = targets(r, 0);
            if (delta != 0.0 && delta != 1.0)
                throw std::invalid_argument("binary outcomes must be 0 or 1");
            const double alpha = clamp_prob(tr.output[0]);
            result.loss -=
                inv_n * (delta * std::log(alpha) +
                         (1.0 - delta) * std::log(1.0 - alpha));
            ds[0] = inv_n * (tr.output[0] - delta);
        } else {
            if (net.g_layer().kind != GLayerKind::Softmax)
                throw std::invalid_argument("MultiCE requires a softmax g-layer");
            const std::size_t J = tr.output.size();
            if (targets.cols != J)
                throw std::invalid_argument("target width must equal categories");
            std::vector<double> dl_dalpha(J);
            double inner = 0.0;
            for (std::size_t j = 0; j < J; ++j) {
                const double delta = targets(r, j);
                const double alpha = clamp_prob(tr.output[j]);
                result.loss -=
                    inv_n * (delta * std::log(alpha) +
                             (1.0 - delta) * std::log(1.0 - alpha));
                dl_dalpha[j] =
                    -inv_n * (delta / alpha - (1.0 - delta) / (1.0 - alpha));
                inner += dl_dalpha[j] * tr.output[j];
            }
            for (std::size_t j = 0; j < J; ++j) {
                ds[j] = tr.output[j] * (dl_dalpha[j] - inner);
            }
        }

        for (std::size_t l = layers.size(); l-- > 0;) {
            const auto& layer = layers[l];
            auto& grad = result.grads[l];
            std::vector<double> da(static_cast<std::size_t>(layer.in), 0.0);
            for (int j = 0; j < layer.in; ++j) {
                const double* brow = tr.design[l][static_cast<std::size_t>(j)].data();
                bool need_da = l > 0;
                if (need_da) {
                    net.spec().design_row_derivative(
                        tr.activations[l][static_cast<std::size_t>(j)],
                        deriv_row.data());
                }
                for (int i = 0; i < layer.out; ++i) {
                    const double d = ds[static_cast<std::size_t>(i)];
                    kernels::axpy(d, brow, grad.row(i, j),
                                  static_cast<std::size_t>(K));
                    if (need_da) {
                        da[static_cast<std::size_t>(j)] +=
                            d * kernels::dot(layer.row(i, j), deriv_row.data(),
                                             static_cast<std::size_t>(K));
                    }
                }
            }
            if (l > 0) {
                ds.resize(da.size());
                for (std::size_t j = 0; j < da.size(); ++j) {
                    const double a = tr.activations[l][j];
                    ds[j] = da[j] * squash_derivative_from_value(a);
                }
            }
        }
        if (!std::isfinite(result.loss)) {
            throw std::runtime_error("non-finite loss at sample " +
                                     std::to_string(r));
        }
    }
    for (std::size_t l = 0; l < result.grads.size(); ++l) {
        for (double g : result.grads[l].beta) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("non-finite gradient in layer " +
                                         std::to_string(l + 1));
            }
        }
    }
    return result;
}

std::string KaneNetwork::to_document() const {
    nlohmann::json doc;
    doc["format"] = "kane-network";
    doc["version"] = 1;
    doc["degree"] = spec_.degree();
    doc["intervals"] = spec_.interval_count();
    doc["widths"] = widths_;
    switch (g_.kind) {
        case GLayerKind::Sigmoid: doc["g_layer"] = "sigmoid"; break;
        case GLayerKind::Softmax: doc["g_layer"] = "softmax"; break;
        case GLayerKind::Identity: doc["g_layer"] = "identity"; break;
    }
    doc["categories"] = g_.categories;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : layers_) {
        layers.push_back({{"out", layer.out},
                          {"in", layer.in},
                          {"basis", layer.basis},
                          {"beta", layer.beta}});
    }
    doc["layers"] = std::move(layers);
    return doc.dump(2);
}

KaneNetwork KaneNetwork::from_document(const std::string& text) {
    const auto doc = nlohmann::json::parse(text);
    if (doc.value("format", "") != "kane-network")
        throw std::invalid_argument("not a kane-network document");
    if (doc.value("version", 0) != 1)
        throw std::invalid_argument("unsupported model document version");
    const int degree = doc.at("degree").get<int>();
    const int intervals = doc.at("intervals").get<int>();
    const auto widths = doc.at("widths").get<std::vector<int>>();
    const std::string g_name = doc.at("g_layer").get<std::string>();
    GLayer g;
    if (g_name == "sigmoid") g = GLayer::sigmoid();
    else if (g_name == "softmax") g = GLayer::softmax(doc.at("categories").get<int>());
    else if (g_name == "identity") g = GLayer::identity();
    else throw std::invalid_argument("unknown g-layer: " + g_name);

    KaneNetwork net(widths, SplineSpec(degree, intervals), g);
    const auto& layers_doc = doc.at("layers");
    if (layers_doc.size() != net.layers_.size())
        throw std::invalid_argument("layer count mismatch");
    for (std::size_t l = 0; l < net.layers_.size(); ++l) {
        auto& layer = net.layers_[l];
        const auto& ld = layers_doc[l];
        if (ld.at("out").get<int>() != layer.out ||
            ld.at("in").get<int>() != layer.in ||
            ld.at("basis").get<int>() != layer.basis) {
            throw std::invalid_argument("layer shape mismatch in document");
        }
        const auto beta = ld.at("beta").get<std::vector<double>>();
        if (beta.size() != layer.beta.size())
            throw std::invalid_argument("coefficient count mismatch");
        for (double b : beta) {
            if (!std::isfinite(b))
                throw std::invalid_argument("non-finite coefficient in document");
        }
        layer.beta = beta;
    }
    return net;
}

}  // namespace poc
