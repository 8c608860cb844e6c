#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "spdelab/rng.hpp"

namespace spdelab::stats {

/// Pairwise (cascade) summation: deterministic and O(log n) error growth.
inline double pairwise_sum(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean: empty sample");
    return pairwise_sum(x) / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("variance: need at least 2 samples");
    const double m = mean(x);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (x[i] - m) * (x[i] - m);
    return pairwise_sum(sq) / static_cast<double>(n - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Standard error of the sample mean.
inline double se_mean(std::span<const double> x) {
    return stddev(x) / std::sqrt(static_cast<double>(x.size()));
}

/// Standard error of the sample variance under approximate normality.
inline double se_variance(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    return variance(x) * std::sqrt(2.0 / (n - 1.0));
}

inline double skewness(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("skewness: need at least 3 samples");
    const double m = mean(x);
    double m2 = 0.0, m3 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

inline double excess_kurtosis(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) throw std::invalid_argument("kurtosis: need at least 4 samples");
    const double m = mean(x);
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2) - 3.0;
}

// Gaussian-sample standard errors for the shape statistics.
inline double se_skewness(std::size_t n) { return std::sqrt(6.0 / static_cast<double>(n)); }
inline double se_kurtosis(std::size_t n) { return std::sqrt(24.0 / static_cast<double>(n)); }

struct LinearFit {
    double slope;
    double intercept;
    double slope_se;
};

/// Ordinary least squares y = a + b x.
inline LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) throw std::invalid_argument("linear_fit: bad sample");
    const double mx = mean(xs), my = mean(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    const double b = sxy / sxx;
    const double a = my - b * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (a + b * xs[i]);
        rss += r * r;
    }
    const double se = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
    return {b, a, se};
}

struct Interval {
    double lo;
    double hi;
    double width() const { return hi - lo; }
};

/// Percentile bootstrap for a statistic of a scalar sample.
template <typename Stat>
Interval bootstrap_ci(std::span<const double> x, Stat&& stat, int n_boot,
                      std::uint64_t seed, double alpha = 0.05) {
    const std::size_t n = x.size();
    if (n < 2 || n_boot < 10) throw std::invalid_argument("bootstrap_ci: bad arguments");
    std::vector<double> reps(n_boot);
    std::vector<double> resample(n);
    for (int b = 0; b < n_boot; ++b) {
        const std::uint64_t key = rng::stream_key(seed, static_cast<std::uint64_t>(b));
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t idx = rng::bits_at(key, i) % n;
            resample[i] = x[idx];
        }
        reps[b] = stat(std::span<const double>(resample));
    }
    std::sort(reps.begin(), reps.end());
    const auto pick = [&](double q) {
        const double pos = q * (n_boot - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < reps.size() ? reps[i] * (1.0 - frac) + reps[i + 1] * frac : reps.back();
    };
    return {pick(alpha / 2.0), pick(1.0 - alpha / 2.0)};
}

/// Hill estimator of the tail index from the k largest samples.
inline double hill_tail_index(std::vector<double> x, std::size_t k) {
    if (x.size() < k + 1 || k < 5) throw std::invalid_argument("hill_tail_index: sample too small");
    std::sort(x.begin(), x.end(), std::greater<double>());
    if (x[k] <= 0.0) throw std::invalid_argument("hill_tail_index: needs positive order statistics");
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(x[i] / x[k]);
    return static_cast<double>(k) / s;
}

inline double sample_correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    if (n != b.size() || n < 2) throw std::invalid_argument("sample_correlation: bad sample");
    const double ma = mean(a), mb = mean(b);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace spdelab::stats
