#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "poc/network.hpp"
#include "poc/rng.hpp"

using namespace poc;

namespace {

KaneNetwork random_net(const std::vector<int>& widths, GLayer g,
                       std::uint64_t seed, int p = 3, int m = 2) {
    KaneNetwork net(widths, SplineSpec(p, m), g);
    net.init_random(seed);
    return net;
}

Matrix random_cube(Rng& rng, std::size_t n, std::size_t d) {
    Matrix x(n, d);
    for (auto& v : x.data) v = rng.uniform();
    return x;
}

}  // namespace

TEST_CASE("squash values") {
    CHECK(squash(0.0) == 0.5);
    const double oracle = 1.0 / (1.0 + std::exp(-2.0));
    CHECK(std::fabs(squash(2.0) - oracle) <= 1e-15);
    CHECK(squash(40.0) >= 1.0 - 1e-16);
    CHECK(squash(40.0) <= 1.0);
    CHECK(squash(800.0) <= 1.0);  // saturates without overflow
    CHECK(std::isfinite(squash(800.0)));
    CHECK(squash(-800.0) >= 0.0);
    CHECK(squash(-800.0) < 1e-300);
    CHECK(squash(-40.0) <= 1e-16);
    CHECK(squash_derivative_from_value(0.5) == 0.25);
}

TEST_CASE("zero-coefficient networks output the symmetric point") {
    KaneNetwork bin({1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid());
    const double x = 0.42;
    CHECK(bin.forward(std::span<const double>(&x, 1))[0] == 0.5);

    KaneNetwork multi({2, 5, 3}, SplineSpec(3, 2), GLayer::softmax(3));
    const std::vector<double> x2{0.3, 0.8};
    const auto out = multi.forward(x2);
    REQUIRE(out.size() == 3);
    for (double v : out) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("forward matches a hand-rolled composition oracle (d=2)") {
    Rng rng(91);
    auto net = random_net({2, 5, 1}, GLayer::sigmoid(), 404);
    const auto& spec = net.spec();
    const int K = spec.basis_count();
    const auto& layers = net.layers();

    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};

        // Layer 1: 5 sums over the two inputs, then the logistic squash.
        std::vector<double> hidden(5);
        for (int i = 0; i < 5; ++i) {
            double s = 0.0;
            for (int j = 0; j < 2; ++j) {
                const auto row = spec.design_row(x[static_cast<std::size_t>(j)]);
                for (int k = 0; k < K; ++k) s += layers[0].at(i, j, k) * row[k];
            }
            hidden[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-s));
        }
        // Layer 2: one sum over the five squashed activations, then sigmoid.
        double s = 0.0;
        for (int j = 0; j < 5; ++j) {
            const auto row =
                spec.design_row(hidden[static_cast<std::size_t>(j)]);
            for (int k = 0; k < K; ++k) s += layers[1].at(0, j, k) * row[k];
        }
        const double oracle = 1.0 / (1.0 + std::exp(-s));

        const double got = net.forward(x)[0];
        CHECK(std::fabs(got - oracle) <= 1e-14);
    }
}

TEST_CASE("enforcement: sigmoid in (0,1), softmax on the simplex") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform() * 3);
        auto bin = random_net(KaneNetwork::canonical_widths(d),
                              GLayer::sigmoid(), 1000 + trial);
        auto multi = random_net(KaneNetwork::canonical_widths(d, 3),
                                GLayer::softmax(3), 2000 + trial);
        for (int i = 0; i < 20; ++i) {
            std::vector<double> x(static_cast<std::size_t>(d));
            for (auto& v : x) v = rng.uniform();
            const double a = bin.forward(x)[0];
            CHECK(a > 0.0);
            CHECK(a < 1.0);
            const auto probs = multi.forward(x);
            double s = 0.0;
            for (double v : probs) {
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(std::fabs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(3);
    int checked_nets = 0;
    for (int d : {1, 2, 3}) {
        for (int hidden : {1, 2}) {  // total layers 3 and 4
            for (bool multi : {false, true}) {
                const int out_dim = multi ? 3 : 1;
                const auto widths =
                    KaneNetwork::canonical_widths(d, out_dim, hidden);
                auto net = random_net(
                    widths, multi ? GLayer::softmax(3) : GLayer::sigmoid(),
                    static_cast<std::uint64_t>(7 * d + hidden + (multi ? 100 : 0)));
                const LossKind kind =
                    multi ? LossKind::MultiCE : LossKind::BinaryCE;

                const std::size_t n = 7;
                Matrix x = random_cube(rng, n, static_cast<std::size_t>(d));
                Matrix t(n, static_cast<std::size_t>(out_dim));
                for (std::size_t i = 0; i < n; ++i) {
                    if (multi) {
                        t(i, i % 3) = 1.0;
                    } else {
                        t(i, 0) = (i % 2 == 0) ? 1.0 : 0.0;
                    }
                }

                const auto lg = loss_and_gradient(net, x, t, kind);
                std::vector<double> theta(net.parameter_count());
                net.parameters_to(theta);
                std::vector<double> flat;
                for (const auto& layer : lg.grads)
                    flat.insert(flat.end(), layer.beta.begin(),
                                layer.beta.end());
                REQUIRE(flat.size() == theta.size());

                KaneNetwork work = net;
                const double h = 1e-6;
                for (std::size_t pidx = 0; pidx < theta.size(); ++pidx) {
                    auto probe = theta;
                    probe[pidx] = theta[pidx] + h;
                    work.parameters_from(probe);
                    const double f_hi =
                        loss_and_gradient(work, x, t, kind).loss;
                    probe[pidx] = theta[pidx] - h;
                    work.parameters_from(probe);
                    const double f_lo =
                        loss_and_gradient(work, x, t, kind).loss;
                    const double fd = (f_hi - f_lo) / (2.0 * h);
                    const double err = std::fabs(flat[pidx] - fd);
                    const bool ok =
                        err <= 1e-8 || err <= 1e-5 * std::fabs(flat[pidx]);
                    CHECK(ok);
                }
                ++checked_nets;
            }
        }
    }
    CHECK(checked_nets == 12);
}

TEST_CASE("gradient is well-posed at the zero initialization") {
    KaneNetwork net({1, 3, 1}, SplineSpec(3, 2), GLayer::sigmoid());
    Matrix x(4, 1);
    x(0, 0) = 0.1; x(1, 0) = 0.4; x(2, 0) = 0.6; x(3, 0) = 0.9;
    Matrix t(4, 1);
    t(0, 0) = 1.0; t(1, 0) = 0.0; t(2, 0) = 1.0; t(3, 0) = 0.0;
    const auto lg = loss_and_gradient(net, x, t, LossKind::BinaryCE);
    CHECK(std::isfinite(lg.loss));
    for (const auto& layer : lg.grads)
        for (double g : layer.beta) CHECK(std::isfinite(g));
}

TEST_CASE("duplicating every row leaves loss and gradient unchanged") {
    Rng rng(55);
    auto net = random_net({2, 5, 1}, GLayer::sigmoid(), 8);
    Matrix x = random_cube(rng, 9, 2);
    Matrix t(9, 1);
    for (std::size_t i = 0; i < 9; ++i) t(i, 0) = (i % 3 == 0) ? 1.0 : 0.0;

    Matrix x2(18, 2), t2(18, 1);
    for (std::size_t i = 0; i < 18; ++i) {
        x2(i, 0) = x(i % 9, 0);
        x2(i, 1) = x(i % 9, 1);
        t2(i, 0) = t(i % 9, 0);
    }
    const auto a = loss_and_gradient(net, x, t, LossKind::BinaryCE);
    const auto b = loss_and_gradient(net, x2, t2, LossKind::BinaryCE);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    for (std::size_t l = 0; l < a.grads.size(); ++l)
        for (std::size_t i = 0; i < a.grads[l].beta.size(); ++i)
            CHECK(a.grads[l].beta[i] ==
                  doctest::Approx(b.grads[l].beta[i]).epsilon(1e-12));
}

TEST_CASE("serialization round-trips bit-exactly") {
    auto net = random_net({2, 5, 3}, GLayer::softmax(3), 77);
    const std::string doc = net.to_document();
    const KaneNetwork back = KaneNetwork::from_document(doc);

    CHECK(back.widths() == net.widths());
    CHECK(back.g_layer().kind == net.g_layer().kind);
    CHECK(back.spec().degree() == net.spec().degree());
    CHECK(back.spec().interval_count() == net.spec().interval_count());

    std::vector<double> a(net.parameter_count()), b(back.parameter_count());
    net.parameters_to(a);
    back.parameters_to(b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // Re-serializing the deserialized network reproduces the document.
    CHECK(back.to_document() == doc);

    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};
        const auto ya = net.forward(x);
        const auto yb = back.forward(x);
        for (std::size_t j = 0; j < ya.size(); ++j) CHECK(ya[j] == yb[j]);
    }
}

TEST_CASE("tampered documents are rejected") {
    auto net = random_net({1, 3, 1}, GLayer::sigmoid(), 3);
    const std::string doc = net.to_document();

    CHECK_THROWS(KaneNetwork::from_document("not json"));
    CHECK_THROWS(KaneNetwork::from_document("{}"));

    std::string wrong_format = doc;
    const auto pos = wrong_format.find("kane-network");
    REQUIRE(pos != std::string::npos);
    wrong_format.replace(pos, 12, "other-format");
    CHECK_THROWS(KaneNetwork::from_document(wrong_format));
}

TEST_CASE("parameter vector round trip and count") {
    auto net = random_net({2, 5, 1}, GLayer::sigmoid(), 12);
    // (5*2 + 1*5) tensors of K=5 coefficients each.
    CHECK(net.parameter_count() == (5 * 2 + 1 * 5) * 5);
    std::vector<double> theta(net.parameter_count());
    net.parameters_to(theta);
    KaneNetwork other({2, 5, 1}, SplineSpec(3, 2), GLayer::sigmoid());
    other.parameters_from(theta);
    const std::vector<double> x{0.2, 0.9};
    CHECK(other.forward(x)[0] == net.forward(x)[0]);
}

TEST_CASE("canonical widths") {
    CHECK(KaneNetwork::canonical_widths(1) == std::vector<int>{1, 3, 1});
    CHECK(KaneNetwork::canonical_widths(2, 3) == std::vector<int>{2, 5, 3});
    CHECK(KaneNetwork::canonical_widths(2, 1, 2) ==
          std::vector<int>{2, 5, 5, 1});
}

TEST_CASE("init_random is seed-deterministic and roughly N(0, 0.1)") {
    auto a = random_net({3, 7, 1}, GLayer::sigmoid(), 99);
    auto b = random_net({3, 7, 1}, GLayer::sigmoid(), 99);
    std::vector<double> pa(a.parameter_count()), pb(b.parameter_count());
    a.parameters_to(pa);
    b.parameters_to(pb);
    CHECK(pa == pb);

    auto big = random_net({3, 21, 21, 1}, GLayer::sigmoid(), 1);
    std::vector<double> p(big.parameter_count());
    big.parameters_to(p);
    double mean = 0.0, var = 0.0;
    for (double v : p) mean += v;
    mean /= static_cast<double>(p.size());
    for (double v : p) var += (v - mean) * (v - mean);
    var /= static_cast<double>(p.size());
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.1));
}
