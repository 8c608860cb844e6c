#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "spdelab/quadrature.hpp"

namespace spdelab::kernel {

// Neumann heat kernel on [0,1] for du/dt = d^2u/dx^2, normalized so that
// the kernel has unit mass: G(t,x,y) = (4 pi t)^{-1/2} sum over images.
// Two series are exposed; green() picks the faster-converging one.

struct KernelEval {
    double t;
    double x;
    double y;
    double tol;
    int n_terms;  // image pairs or cosine modes actually summed
    double value;
};

namespace detail {

inline void check_point(double t, double x, double y, double tol) {
    if (!std::isfinite(t) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(tol))
        throw std::domain_error("heat kernel: non-finite input");
    if (t <= 0.0) throw std::domain_error("heat kernel: t must be positive");
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0)
        throw std::domain_error("heat kernel: positions must lie in [0,1]");
    if (tol <= 0.0) throw std::domain_error("heat kernel: tol must be positive");
}

}  // namespace detail

/// Method-of-images series with Neumann reflections. Converges fast for
/// small t (Gaussian tails); terms are added until the next image pair is
/// below tol.
inline KernelEval green_images(double t, double x, double y, double tol = 1e-12) {
    detail::check_point(t, x, y, tol);
    const double pref = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
    const double inv4t = 1.0 / (4.0 * t);
    auto pair_term = [&](int n) {
        const double d1 = y - x - 2.0 * n;
        const double d2 = y + x - 2.0 * n;
        return std::exp(-d1 * d1 * inv4t) + std::exp(-d2 * d2 * inv4t);
    };
    double sum = pair_term(0);
    int n = 1;
    for (; n < 100000; ++n) {
        const double add = pair_term(n) + pair_term(-n);
        sum += add;
        if (pref * add < tol && n >= 2) break;
    }
    return {t, x, y, tol, n, pref * sum};
}

/// Spectral cosine series 1 + sum_{n>=1} 2 e^{-n^2 pi^2 t} cos(n pi x) cos(n pi y).
/// Converges fast for large t.
inline KernelEval green_spectral(double t, double x, double y, double tol = 1e-12) {
    detail::check_point(t, x, y, tol);
    const double pi2t = std::numbers::pi * std::numbers::pi * t;
    double sum = 1.0;
    int n = 1;
    for (; n < 100000; ++n) {
        const double amp = 2.0 * std::exp(-static_cast<double>(n) * n * pi2t);
        if (amp < tol && n >= 2) break;
        sum += amp * std::cos(n * std::numbers::pi * x) * std::cos(n * std::numbers::pi * y);
    }
    return {t, x, y, tol, n, sum};
}

inline constexpr double kSeriesSwitchTime = 0.05;

inline KernelEval green_eval(double t, double x, double y, double tol = 1e-12) {
    return t > kSeriesSwitchTime ? green_spectral(t, x, y, tol) : green_images(t, x, y, tol);
}

inline double green(double t, double x, double y, double tol = 1e-12) {
    return green_eval(t, x, y, tol).value;
}

/// Integral of G^2 over the slab: int_{t_lo}^{t_hi} int_0^1 G^2(t_hi-s, x, y) dy ds.
/// The spatial integral collapses to G(2 tau, x, x) by the semigroup property,
/// and the substitution tau = w^2 removes the tau^{-1/2} endpoint singularity.
inline quad::Result g_squared_time_integral(double t_lo, double t_hi, double x,
                                            double tol = 1e-10) {
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || !std::isfinite(x))
        throw std::domain_error("g_squared_time_integral: non-finite input");
    if (t_lo < 0.0 || t_lo > t_hi) throw std::domain_error("g_squared_time_integral: need 0 <= t_lo <= t_hi");
    if (x < 0.0 || x > 1.0) throw std::domain_error("g_squared_time_integral: x must lie in [0,1]");
    const double delta = t_hi - t_lo;
    if (delta == 0.0) return {0.0, 0.0};
    auto f = [&](double w) {
        if (w == 0.0) return 2.0 / std::sqrt(8.0 * std::numbers::pi);
        return 2.0 * w * green(2.0 * w * w, x, x, 1e-14);
    };
    return quad::adaptive_simpson(f, 0.0, std::sqrt(delta), tol);
}

/// Covariance of the driftless field:
/// Cov[u(t1,x1), u(t2,x2)] = int_0^{min} int_0^1 G(t1-s,x1,y) G(t2-s,x2,y) dy ds.
/// Chapman-Kolmogorov reduces it to (1/2) int G(sigma, x1, x2) dsigma over
/// sigma in [t1+t2-2 min, t1+t2]; the same w-substitution handles the
/// coincident-point singularity.
inline double covariance(double t1, double t2, double x1, double x2, double tol = 1e-10) {
    if (!std::isfinite(t1) || !std::isfinite(t2) || !std::isfinite(x1) || !std::isfinite(x2))
        throw std::domain_error("covariance: non-finite input");
    if (t1 <= 0.0 || t2 <= 0.0) throw std::domain_error("covariance: times must be positive");
    if (x1 < 0.0 || x1 > 1.0 || x2 < 0.0 || x2 > 1.0)
        throw std::domain_error("covariance: positions must lie in [0,1]");
    const double lo = std::abs(t1 - t2);
    const double hi = t1 + t2;
    auto f = [&](double w) {
        if (w == 0.0) {
            // only reachable when t1 == t2; with x1 == x2 the limit of
            // w * G(w^2, x1, x2) is (4 pi)^{-1/2}, otherwise 0.
            return x1 == x2 ? 1.0 / std::sqrt(4.0 * std::numbers::pi) : 0.0;
        }
        return w * green(w * w, x1, x2, 1e-14);
    };
    return quad::adaptive_simpson(f, std::sqrt(lo), std::sqrt(hi), tol).value;
}

}  // namespace spdelab::kernel
