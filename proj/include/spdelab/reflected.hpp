#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "spdelab/rng.hpp"

namespace spdelab {

/// Fold a real number into [0,1] by reflection at both endpoints
/// (period-2 folding map). Idempotent on [0,1].
inline double reflect(double z) {
    if (!std::isfinite(z)) throw std::domain_error("reflect: non-finite input");
    double w = std::fmod(z, 2.0);
    if (w < 0.0) w += 2.0;
    return 1.0 - std::abs(1.0 - w);
}

/// One sampled doubly reflected Brownian path on [0,1].
/// The driver B has Var[B(t)] = 2t so the process is generated by d^2/dx^2,
/// matching the Neumann heat kernel as transition density.
struct PathSample {
    double start;
    std::vector<double> times;      // 0 = r_0 < ... < r_K = T
    std::vector<double> positions;  // reflect(start + B(r_k)), all in [0,1]
    std::vector<double> driver;     // unreflected start + B(r_k)
    std::uint64_t seed;
};

inline PathSample sample_path(double x, double T, double dt, std::uint64_t seed) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("sample_path: start must lie in [0,1]");
    if (!(dt > 0.0) || !(T >= 0.0)) throw std::domain_error("sample_path: need dt > 0 and T >= 0");
    const int steps = T == 0.0 ? 0 : static_cast<int>(std::ceil(T / dt - 1e-12));
    PathSample p;
    p.start = x;
    p.seed = seed;
    p.times.resize(steps + 1);
    p.positions.resize(steps + 1);
    p.driver.resize(steps + 1);
    p.times[0] = 0.0;
    p.positions[0] = x;
    p.driver[0] = x;
    const std::uint64_t key = rng::stream_key(seed, 0x7061746873ULL);  // "paths"
    double b = x;
    for (int k = 1; k <= steps; ++k) {
        const double t = std::min(k * dt, T);
        const double step = t - p.times[k - 1];
        b += std::sqrt(2.0 * step) * rng::normal_at(key, k);
        p.times[k] = t;
        p.driver[k] = b;
        p.positions[k] = reflect(b);
    }
    return p;
}

}  // namespace spdelab
