#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace spdelab::quad {

struct Result {
    double value;
    double error_estimate;
};

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth, double& err_acc) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double h6 = (b - a) / 12.0;
    const double left = h6 * (fa + 4.0 * flm + fm);
    const double right = h6 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        err_acc += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err_acc) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err_acc);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a,b]. The integrand must be finite on the
/// closed interval; substitute away endpoint singularities before calling.
template <typename F>
Result adaptive_simpson(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
    if (!(a <= b)) throw std::invalid_argument("adaptive_simpson: a > b");
    if (a == b) return {0.0, 0.0};
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double err = 0.0;
    const double v = detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, err);
    return {v, err};
}

/// Composite Simpson with a fixed odd number of nodes.
template <typename F>
double composite_simpson(const F& f, double a, double b, int nodes) {
    if (nodes < 3) throw std::invalid_argument("composite_simpson: need >= 3 nodes");
    if (nodes % 2 == 0) ++nodes;
    const double h = (b - a) / (nodes - 1);
    double s = f(a) + f(b);
    for (int i = 1; i < nodes - 1; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace spdelab::quad
