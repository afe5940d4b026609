#pragma once

#include <cstddef>
#include <vector>

namespace poc {

// Clamped uniform B-spline basis on [0, 1]: degree p, m equal intervals,
// K = p + m basis functions. Endpoint knots are repeated p+1 times, so the
// basis is interpolatory at 0 and 1 and the row at any x sums to one.
class SplineSpec {
public:
    SplineSpec(int degree, int interval_count);

    int degree() const { return degree_; }
    int interval_count() const { return interval_count_; }
    int basis_count() const { return basis_count_; }
    const std::vector<double>& knots() const { return knots_; }

    // B_k^p(x) for k in [0, K), x in [0, 1]. Cox-de Boor with 0/0 := 0;
    // the last basis function is 1 at x = 1.
    double basis_value(int k, double x) const;

    // All K basis values at x. At most p+1 entries are nonzero.
    std::vector<double> design_row(double x) const;
    void design_row(double x, double* out) const;

    // d/dx of every basis function at x (one-sided at the endpoints).
    // Entries sum to zero; identically zero for degree 0.
    std::vector<double> design_row_derivative(double x) const;
    void design_row_derivative(double x, double* out) const;

private:
    // Index of the knot span containing x, with right-closure at x = 1.
    int find_span(double x) const;

    int degree_;
    int interval_count_;
    int basis_count_;
    std::vector<double> knots_;
};

}  // namespace poc
