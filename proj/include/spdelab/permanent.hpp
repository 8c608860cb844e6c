#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/stats.hpp"

namespace spdelab::permanent {

/// Strictly decreasing times t > s_1 > ... > s_m > 0 in gap representation:
/// g_j = s_j - s_{j+1} with s_{m+1} = 0, so s_j is a suffix sum of the gaps.
struct GapVector {
    std::vector<double> s;

    static GapVector from_times(std::vector<double> times) {
        if (times.empty()) throw std::invalid_argument("GapVector: empty");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > 0.0)) throw std::domain_error("GapVector: times must be positive");
            if (i > 0 && !(times[i] < times[i - 1]))
                throw std::domain_error("GapVector: times must be strictly decreasing");
        }
        return {std::move(times)};
    }

    static GapVector from_gaps(const std::vector<double>& gaps) {
        if (gaps.empty()) throw std::invalid_argument("GapVector: empty");
        for (double g : gaps)
            if (!(g > 0.0)) throw std::domain_error("GapVector: gaps must be positive");
        std::vector<double> times(gaps.size());
        double acc = 0.0;
        for (std::size_t i = gaps.size(); i-- > 0;) {
            acc += gaps[i];
            times[i] = acc;
        }
        return {std::move(times)};
    }

    int m() const { return static_cast<int>(s.size()); }

    double gap(int j) const {  // 1-based, gap(m) = s_m
        return j < m() ? s[j - 1] - s[j] : s[m() - 1];
    }

    /// sigma_j = gap_j^{-1/2}, the diagonal of Sigma.
    std::vector<double> sigmas() const {
        std::vector<double> out(m());
        for (int j = 1; j <= m(); ++j) out[j - 1] = 1.0 / std::sqrt(gap(j));
        return out;
    }
};

/// The tridiagonal M Sigma M^T: a_j = sigma_j + sigma_{j+1} for j < m,
/// a_m = sigma_m, b_j = -sigma_{j+1}.
struct TridiagSystem {
    int m;
    std::vector<double> diag;
    std::vector<double> off;

    static TridiagSystem from_gaps(const GapVector& gaps) {
        const auto sig = gaps.sigmas();
        TridiagSystem t;
        t.m = gaps.m();
        t.diag.resize(t.m);
        t.off.resize(std::max(0, t.m - 1));
        for (int j = 0; j < t.m; ++j) t.diag[j] = j + 1 < t.m ? sig[j] + sig[j + 1] : sig[j];
        for (int j = 0; j + 1 < t.m; ++j) t.off[j] = -sig[j + 1];
        return t;
    }

    /// Dense m x m matrix (row-major) for oracle comparisons.
    std::vector<double> dense() const {
        std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
        for (int j = 0; j < m; ++j) {
            a[static_cast<std::size_t>(j) * m + j] = diag[j];
            if (j + 1 < m) {
                a[static_cast<std::size_t>(j) * m + j + 1] = off[j];
                a[static_cast<std::size_t>(j + 1) * m + j] = off[j];
            }
        }
        return a;
    }
};

enum class BaseCase {
    paper,      // f_2 = sigma_1 sigma_2 + sigma_2^2, as printed
    corrected,  // f_2 = sigma_1 sigma_2 + 2 sigma_2^2, the true 2x2 permanent
};

/// The appendix recursion
///   f_m = (sigma_1 + sigma_2) f_{m-1}(suffix) + sigma_2^2 f_{m-2}(suffix)
/// evaluated iteratively from the tail. With the corrected base case the
/// value equals per(M Sigma M^T) exactly.
inline double permanent_recursive(const GapVector& gaps, BaseCase base = BaseCase::corrected) {
    const auto sig = gaps.sigmas();
    const int m = gaps.m();
    if (m == 1) return sig[0];
    const double tail_coeff = base == BaseCase::corrected ? 2.0 : 1.0;
    double f_next2 = sig[m - 1];                                              // F(m)
    double f_next = sig[m - 2] * sig[m - 1] + tail_coeff * sig[m - 1] * sig[m - 1];  // F(m-1)
    if (m == 2) return f_next;
    for (int i = m - 2; i >= 1; --i) {
        const double f_cur = (sig[i - 1] + sig[i]) * f_next + sig[i] * sig[i] * f_next2;
        f_next2 = f_next;
        f_next = f_cur;
    }
    return f_next;
}

/// Exact permanent by Ryser inclusion-exclusion, O(2^m m^2).
inline double permanent_ryser(const std::vector<double>& matrix, int m) {
    if (m < 1 || m > 14) throw std::invalid_argument("permanent_ryser: m must be in [1,14]");
    if (matrix.size() != static_cast<std::size_t>(m) * m)
        throw std::invalid_argument("permanent_ryser: matrix size mismatch");
    double sum = 0.0;
    const std::uint32_t full = 1u << m;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
        double prod = 1.0;
        for (int i = 0; i < m; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < m; ++j)
                if (mask & (1u << j)) rowsum += matrix[static_cast<std::size_t>(i) * m + j];
            prod *= rowsum;
        }
        sum += (__builtin_popcount(mask) & 1 ? 1.0 : -1.0) * prod;
    }
    return (m % 2 == 0 ? -1.0 : 1.0) * sum;
}

inline double permanent_ryser(const TridiagSystem& tri) { return permanent_ryser(tri.dense(), tri.m); }

/// Fully expanded p_m with like terms combined. Multi-indices are exponent
/// vectors over (x_1, ..., x_m); coefficients are exact integers.
struct PermanentPolynomial {
    int m;
    std::vector<std::pair<std::vector<std::uint8_t>, std::int64_t>> terms;

    double eval(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != m) throw std::invalid_argument("PermanentPolynomial: arity mismatch");
        double s = 0.0;
        for (const auto& [alpha, c] : terms) {
            double t = static_cast<double>(c);
            for (int j = 0; j < m; ++j)
                for (int e = 0; e < alpha[j]; ++e) t *= x[j];
            s += t;
        }
        return s;
    }

    std::int64_t max_coefficient() const {
        std::int64_t c = 0;
        for (const auto& [alpha, coef] : terms) c = std::max(c, coef);
        return c;
    }
};

/// Expand the polynomial recursion p_i = (x_i + x_{i+1}) p_{i+1} + x_{i+1}^2 p_{i+2}
/// with the paper's base cases p(x_m) = x_m and p(x_{m-1},x_m) = x_{m-1} x_m + x_m^2,
/// evaluated over suffixes so that eval(sigmas) == permanent_recursive(paper base).
inline PermanentPolynomial expand_polynomial(int m) {
    if (m < 1 || m > 20) throw std::invalid_argument("expand_polynomial: m must be in [1,20]");
    using Terms = std::map<std::vector<std::uint8_t>, std::int64_t>;
    auto mono = [m](int var, int e1, int var2 = -1, int e2 = 0) {
        std::vector<std::uint8_t> a(m, 0);
        a[var] = static_cast<std::uint8_t>(e1);
        if (var2 >= 0) a[var2] = static_cast<std::uint8_t>(a[var2] + e2);
        return a;
    };
    Terms next2;  // suffix polynomial starting at index i+2
    Terms next;   // suffix polynomial starting at index i+1
    next[mono(m - 1, 1)] = 1;
    if (m == 1) {
        PermanentPolynomial p{m, {}};
        for (auto& [a, c] : next) p.terms.emplace_back(a, c);
        return p;
    }
    next2.swap(next);
    next[mono(m - 2, 1, m - 1, 1)] = 1;
    next[mono(m - 1, 2)] = 1;
    for (int i = m - 2; i >= 1; --i) {
        Terms cur;
        const int xi = i - 1, xi1 = i;  // 0-based variable indices
        for (const auto& [alpha, c] : next) {
            auto a1 = alpha;
            ++a1[xi];
            cur[std::move(a1)] += c;
            auto a2 = alpha;
            ++a2[xi1];
            cur[std::move(a2)] += c;
        }
        for (const auto& [alpha, c] : next2) {
            auto a = alpha;
            a[xi1] = static_cast<std::uint8_t>(a[xi1] + 2);
            cur[std::move(a)] += c;
        }
        next2.swap(next);
        next.swap(cur);
    }
    PermanentPolynomial p{m, {}};
    p.terms.reserve(next.size());
    for (auto& [a, c] : next) p.terms.emplace_back(a, c);
    return p;
}

/// gamma_m = 2 gamma_{m-1} + gamma_{m-2}, the pre-combination term count.
inline std::uint64_t gamma_count(int m) {
    if (m < 1 || m > 45) throw std::invalid_argument("gamma_count: m must be in [1,45]");
    std::uint64_t a = 1, b = 2;  // gamma_1, gamma_2
    if (m == 1) return a;
    for (int i = 3; i <= m; ++i) {
        const std::uint64_t c = 2 * b + a;
        a = b;
        b = c;
    }
    return b;
}

/// Closed form of int_{0<s_m<...<s_1<t} prod_j gap_j^{-p/4} ds
/// = t^{m(1-p/4)} Gamma(1-p/4)^m / Gamma(m(1-p/4)+1), via log-Gamma.
inline double dirichlet_det_integral(int m, double t, double p) {
    if (m < 1) throw std::invalid_argument("dirichlet_det_integral: m must be >= 1");
    if (!(t > 0.0)) throw std::domain_error("dirichlet_det_integral: t must be positive");
    if (p < 0.0 || p >= 4.0)
        throw std::domain_error("dirichlet_det_integral: integral diverges unless 0 <= p < 4");
    const double a = 1.0 - 0.25 * p;
    return std::exp(m * (a * std::log(t) + std::lgamma(a)) - std::lgamma(m * a + 1.0));
}

struct SimplexEstimate {
    double estimate;    // int_{simplex} |f_m|^beta
    double se;          // batch-based standard error
    double root_m;      // estimate^{1/m}
    double root_m_se;   // delta-method SE of the root
    double tail_index;  // Hill estimate on the sampled integrand
    int n_mc;
};

/// Monte Carlo over the ordered simplex via sorted uniforms; the uniform
/// density t^{-m} m! is handled analytically. The integrand has a heavy tail
/// for beta >= 1/2, so the SE comes from batch means and a Hill tail-index
/// diagnostic guards the estimate.
inline SimplexEstimate simplex_integral_beta(int m, double t, double beta, int n_mc,
                                             std::uint64_t seed = 99,
                                             BaseCase base = BaseCase::corrected, int threads = 0) {
    if (m < 1 || m > 30) throw std::invalid_argument("simplex_integral_beta: m must be in [1,30]");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("simplex_integral_beta: beta must lie in (0,1)");
    if (n_mc < 10000) throw std::invalid_argument("simplex_integral_beta: need n_mc >= 10^4");
    if (!(t > 0.0)) throw std::domain_error("simplex_integral_beta: t must be positive");

    std::vector<double> values(n_mc);
    parallel_for(n_mc, [&](std::size_t i) {
        const std::uint64_t key = rng::stream_key(seed, i);
        double pts[32];
        for (int j = 0; j < m; ++j) pts[j] = t * rng::uniform_at(key, j);
        std::sort(pts, pts + m, std::greater<double>());
        // recursion on sigmas computed in place from the sorted times
        double sig[32];
        for (int j = 0; j < m; ++j) {
            const double gap = j + 1 < m ? pts[j] - pts[j + 1] : pts[j];
            sig[j] = 1.0 / std::sqrt(gap);
        }
        double value;
        if (m == 1) {
            value = sig[0];
        } else {
            const double tail_coeff = base == BaseCase::corrected ? 2.0 : 1.0;
            double f2 = sig[m - 1];
            double f1 = sig[m - 2] * sig[m - 1] + tail_coeff * sig[m - 1] * sig[m - 1];
            for (int i2 = m - 2; i2 >= 1; --i2) {
                const double f0 = (sig[i2 - 1] + sig[i2]) * f1 + sig[i2] * sig[i2] * f2;
                f2 = f1;
                f1 = f0;
            }
            value = f1;
        }
        values[i] = std::pow(std::abs(value), beta);
    }, threads);

    // Hill diagnostic: an index at or below 1 means even the mean is unstable.
    const std::size_t k = std::max<std::size_t>(50, values.size() / 200);
    const double tail = stats::hill_tail_index(values, k);
    if (tail <= 1.05)
        throw std::runtime_error(
            "simplex_integral_beta: integrand tail too heavy (Hill index " + std::to_string(tail) +
            "); choose beta further from 1 or use stratified sampling");

    const int n_batches = 32;
    std::vector<double> batch_means(n_batches, 0.0);
    const std::size_t per = values.size() / n_batches;
    for (int b = 0; b < n_batches; ++b) {
        const std::size_t lo = b * per;
        const std::size_t hi = b + 1 == n_batches ? values.size() : lo + per;
        batch_means[b] = stats::pairwise_sum(std::span<const double>(values).subspan(lo, hi - lo)) /
                         static_cast<double>(hi - lo);
    }
    const double simplex_volume = std::exp(m * std::log(t) - std::lgamma(m + 1.0));
    SimplexEstimate out;
    out.n_mc = n_mc;
    out.estimate = simplex_volume * stats::mean(batch_means);
    out.se = simplex_volume * stats::se_mean(batch_means);
    out.root_m = std::pow(out.estimate, 1.0 / m);
    out.root_m_se = out.root_m * out.se / (m * out.estimate);
    out.tail_index = tail;
    return out;
}

}  // namespace spdelab::permanent
