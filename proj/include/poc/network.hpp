#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poc/matrix.hpp"
#include "poc/spline.hpp"

namespace poc {

// Final range-enforcing activation.
enum class GLayerKind { Sigmoid, Softmax, Identity };

struct GLayer {
    GLayerKind kind = GLayerKind::Sigmoid;
    int categories = 1;  // J, for Softmax

    static GLayer sigmoid() { return {GLayerKind::Sigmoid, 1}; }
    static GLayer softmax(int j) { return {GLayerKind::Softmax, j}; }
    static GLayer identity() { return {GLayerKind::Identity, 1}; }
};

// Coefficient tensor of one spline-matrix layer: beta[i][j][k] weights basis
// function k applied to input j, accumulated into output i.
struct LayerCoefficients {
    int out = 0;
    int in = 0;
    int basis = 0;
    std::vector<double> beta;  // row-major (out, in, basis)

    LayerCoefficients() = default;
    LayerCoefficients(int o, int i, int k)
        : out(o), in(i), basis(k),
          beta(static_cast<std::size_t>(o) * i * k, 0.0) {}

    double& at(int i, int j, int k) {
        return beta[(static_cast<std::size_t>(i) * in + j) * basis + k];
    }
    double at(int i, int j, int k) const {
        return beta[(static_cast<std::size_t>(i) * in + j) * basis + k];
    }
    const double* row(int i, int j) const {
        return beta.data() + (static_cast<std::size_t>(i) * in + j) * basis;
    }
    double* row(int i, int j) {
        return beta.data() + (static_cast<std::size_t>(i) * in + j) * basis;
    }
};

// Numerically stable logistic map; keeps hidden-layer spline inputs in [0,1].
double squash(double s);
double squash_derivative_from_value(double a);  // a*(1-a) for a = squash(s)

enum class LossKind { BinaryCE, MultiCE };

// KANE: spline-matrix layers composed by summation, hidden sums passed
// through the logistic squash, and a final g-layer enforcing the output
// range. Immutable after construction apart from coefficient mutation by
// the owning optimizer.
class KaneNetwork {
public:
    KaneNetwork(std::vector<int> widths, SplineSpec spec, GLayer g);

    // Canonical architecture: widths (d, 2d+1, output).
    static std::vector<int> canonical_widths(int d, int output_dim = 1,
                                             int hidden_layers = 1);

    // Independent N(0, 0.1) draws for every coefficient.
    void init_random(std::uint64_t seed);

    const std::vector<int>& widths() const { return widths_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    const SplineSpec& spec() const { return spec_; }
    const GLayer& g_layer() const { return g_; }
    std::vector<LayerCoefficients>& layers() { return layers_; }
    const std::vector<LayerCoefficients>& layers() const { return layers_; }

    std::size_t parameter_count() const;
    void parameters_to(std::span<double> out) const;
    void parameters_from(std::span<const double> in);

    // Output for one feature vector in [0,1]^d: length 1 (Sigmoid/Identity)
    // or J (Softmax, on the simplex).
    std::vector<double> forward(std::span<const double> x) const;

    // Row-wise forward; identical to n independent forward calls.
    Matrix forward_batch(const Matrix& x) const;

    std::string to_document() const;
    static KaneNetwork from_document(const std::string& doc);

private:
    std::vector<int> widths_;
    SplineSpec spec_;
    GLayer g_;
    std::vector<LayerCoefficients> layers_;
};

// Mean cross-entropy losses. Predictions are clamped to
// [1e-12, 1 - 1e-12] before the logs.
double bce_loss(std::span<const double> predictions,
                std::span<const double> outcomes);
double ce_loss(const Matrix& predictions, const Matrix& outcomes);

// Mean loss and its exact gradient with respect to every coefficient.
// targets: n x 1 in {0,1} for BinaryCE, n x J one-hot for MultiCE.
struct LossGradient {
    double loss = 0.0;
    std::vector<LayerCoefficients> grads;
};
LossGradient loss_and_gradient(const KaneNetwork& net, const Matrix& x,
                               const Matrix& targets, LossKind kind);

}  // namespace poc
