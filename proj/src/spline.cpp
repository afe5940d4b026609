#include "poc/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poc {

SplineSpec::SplineSpec(int degree, int interval_count)
    : degree_(degree),
      interval_count_(interval_count),
      basis_count_(degree + interval_count) {
    if (degree < 0) throw std::invalid_argument("spline degree must be >= 0");
    if (interval_count < 1)
        throw std::invalid_argument("spline interval count must be >= 1");
    // Length m + 1 + 2p: p+1 zeros, simple interior knots, p+1 ones.
    knots_.resize(static_cast<std::size_t>(interval_count + 1 + 2 * degree));
    for (int i = 0; i <= degree; ++i) knots_[static_cast<std::size_t>(i)] = 0.0;
    for (int i = 1; i < interval_count; ++i) {
        knots_[static_cast<std::size_t>(degree + i)] =
            static_cast<double>(i) / interval_count;
    }
    for (int i = 0; i <= degree; ++i) {
        knots_[static_cast<std::size_t>(degree + interval_count + i)] = 1.0;
    }
}

int SplineSpec::find_span(double x) const {
    const int cell =
        std::min(static_cast<int>(x * interval_count_), interval_count_ - 1);
    return degree_ + cell;
}

namespace {

void check_domain(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("spline evaluation point " + std::to_string(x) +
                                " outside [0,1]; scale features first");
    }
}

// Nonzero basis values of the given degree at x, written to n[0..q].
// Triangular scheme over the span; n[r] = B_{span-q+r}^q(x).
void nonzero_basis(const std::vector<double>& t, int span, int q, double x,
                   double* n) {
    n[0] = 1.0;
    double left[16], right[16];
    for (int j = 1; j <= q; ++j) {
        left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
        right[j] = t[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
}

}  // namespace

void SplineSpec::design_row(double x, double* out) const {
    check_domain(x);
    if (degree_ > 15) throw std::invalid_argument("spline degree too large");
    std::fill(out, out + basis_count_, 0.0);
    const int span = find_span(x);
    double n[16];
    nonzero_basis(knots_, span, degree_, x, n);
    for (int r = 0; r <= degree_; ++r) out[span - degree_ + r] = n[r];
}

std::vector<double> SplineSpec::design_row(double x) const {
    std::vector<double> row(static_cast<std::size_t>(basis_count_));
    design_row(x, row.data());
    return row;
}

double SplineSpec::basis_value(int k, double x) const {
    if (k < 0 || k >= basis_count_)
        throw std::out_of_range("basis index out of range");
    check_domain(x);
    const int span = find_span(x);
    if (k < span - degree_ || k > span) return 0.0;
    double n[16];
    nonzero_basis(knots_, span, degree_, x, n);
    return n[k - (span - degree_)];
}

void SplineSpec::design_row_derivative(double x, double* out) const {
    check_domain(x);
    std::fill(out, out + basis_count_, 0.0);
    if (degree_ == 0) return;
    const int span = find_span(x);
    const int q = degree_ - 1;
    // Degree p-1 values on the same knot vector; lower[r] = B_{span-q+r}^{p-1}.
    double lower[16];
    nonzero_basis(knots_, span, q, x, lower);
    auto low_value = [&](int k) -> double {
        const int r = k - (span - q);
        return (r >= 0 && r <= q) ? lower[r] : 0.0;
    };
    // dB_k^p = p * [ B_k^{p-1}/(t_{k+p}-t_k) - B_{k+1}^{p-1}/(t_{k+p+1}-t_{k+1}) ]
    for (int k = span - degree_; k <= span; ++k) {
        const double d1 = knots_[static_cast<std::size_t>(k + degree_)] -
                          knots_[static_cast<std::size_t>(k)];
        const double d2 = knots_[static_cast<std::size_t>(k + degree_ + 1)] -
                          knots_[static_cast<std::size_t>(k + 1)];
        double v = 0.0;
        if (d1 > 0.0) v += low_value(k) / d1;
        if (d2 > 0.0) v -= low_value(k + 1) / d2;
        out[k] = degree_ * v;
    }
}

std::vector<double> SplineSpec::design_row_derivative(double x) const {
    std::vector<double> row(static_cast<std::size_t>(basis_count_));
    design_row_derivative(x, row.data());
    return row;
}

}  // namespace poc
