#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/grid.hpp"
#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"

namespace spdelab {

/// A Cameron-Martin direction: a function on [0,T]x[0,1] with its grid-L2 norm.
struct Direction {
    std::function<double(double, double)> h;  // (t, x) -> value
    double l2_norm = 0.0;
    std::string name;

    double operator()(double t, double x) const { return h(t, x); }
};

/// Midpoint-rule L2 norm of a space-time function on the grid cells.
inline double grid_l2_norm(const SpaceTimeGrid& grid, const std::function<double(double, double)>& f) {
    grid.validate();
    double s = 0.0;
    for (int i = 0; i < grid.nt; ++i)
        for (int j = 0; j < grid.nx; ++j) {
            const double v = f(grid.cell_t_mid(i), grid.cell_x_mid(j));
            s += v * v;
        }
    return std::sqrt(s * grid.dt() * grid.dx());
}

inline Direction make_direction(const SpaceTimeGrid& grid, std::function<double(double, double)> f,
                                std::string name = "custom") {
    Direction d;
    d.l2_norm = grid_l2_norm(grid, f);
    d.h = std::move(f);
    d.name = std::move(name);
    return d;
}

/// Same function rescaled to unit grid-L2 norm.
inline Direction make_unit_direction(const SpaceTimeGrid& grid,
                                     std::function<double(double, double)> f,
                                     std::string name = "custom") {
    const double norm = grid_l2_norm(grid, f);
    if (norm == 0.0) throw std::domain_error("make_unit_direction: zero function");
    Direction d;
    d.h = [f = std::move(f), norm](double t, double x) { return f(t, x) / norm; };
    d.l2_norm = 1.0;
    d.name = std::move(name);
    return d;
}

/// Discrete space-time white noise: entry (i,j) is the increment of W over
/// the cell [t_i, t_{i+1}] x [x_j, x_{j+1}], i.i.d. Normal(0, dt*dx).
/// Identical (grid, seed) yields bitwise-identical matrices.
class NoiseRealization {
public:
    NoiseRealization(SpaceTimeGrid grid, std::uint64_t seed, std::vector<double> increments)
        : grid_(grid), seed_(seed), inc_(std::move(increments)) {
        grid_.validate();
        if (inc_.size() != static_cast<std::size_t>(grid_.nt) * grid_.nx)
            throw std::invalid_argument("NoiseRealization: increment matrix size mismatch");
    }

    const SpaceTimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    double at(int i, int j) const { return inc_[static_cast<std::size_t>(i) * grid_.nx + j]; }
    const std::vector<double>& increments() const { return inc_; }

private:
    SpaceTimeGrid grid_;
    std::uint64_t seed_;
    std::vector<double> inc_;
};

/// Generate the increment matrix. Each row is an independent counter stream,
/// so parallel generation is order-independent.
inline NoiseRealization sample_noise(const SpaceTimeGrid& grid, std::uint64_t seed, int threads = 0) {
    grid.validate();
    const double scale = std::sqrt(grid.dt() * grid.dx());
    std::vector<double> inc(static_cast<std::size_t>(grid.nt) * grid.nx);
    parallel_for(grid.nt, [&](std::size_t i) {
        const std::uint64_t row_key = rng::stream_key(seed, i);
        double* row = inc.data() + i * grid.nx;
        int j = 0;
        for (; j + 1 < grid.nx; j += 2) {
            const auto p = rng::normal_pair_at(row_key, j / 2);
            row[j] = scale * p.first;
            row[j + 1] = scale * p.second;
        }
        if (j < grid.nx) row[j] = scale * rng::normal_pair_at(row_key, j / 2).first;
    }, threads);
    return NoiseRealization(grid, seed, std::move(inc));
}

inline NoiseRealization zero_noise(const SpaceTimeGrid& grid) {
    return NoiseRealization(grid, 0, std::vector<double>(static_cast<std::size_t>(grid.nt) * grid.nx, 0.0));
}

/// W -> W + eps*h: adds eps * h(cell center) * dt * dx to every increment.
/// The input realization is left unmodified.
inline NoiseRealization shift_noise(const NoiseRealization& noise, const Direction& h, double eps) {
    const SpaceTimeGrid& g = noise.grid();
    std::vector<double> inc = noise.increments();
    if (eps != 0.0) {
        const double w = eps * g.dt() * g.dx();
        for (int i = 0; i < g.nt; ++i)
            for (int j = 0; j < g.nx; ++j)
                inc[static_cast<std::size_t>(i) * g.nx + j] += w * h(g.cell_t_mid(i), g.cell_x_mid(j));
    }
    return NoiseRealization(g, noise.seed(), std::move(inc));
}

/// Discrete Wiener integral sum_{i,j} kernel(cell center) * dW_{i,j}.
/// Over seeds it is centered Gaussian with variance -> ||kernel||_{L2}^2.
inline double wiener_integral(const NoiseRealization& noise,
                              const std::function<double(double, double)>& kernel) {
    const SpaceTimeGrid& g = noise.grid();
    double s = 0.0;
    for (int i = 0; i < g.nt; ++i)
        for (int j = 0; j < g.nx; ++j)
            s += kernel(g.cell_t_mid(i), g.cell_x_mid(j)) * noise.at(i, j);
    return s;
}

// Binary replay format: magic, grid parameters and seed, then the raw
// row-major increment payload as 64-bit floats.

inline constexpr char kNoiseMagic[8] = {'S', 'P', 'D', 'E', 'N', 'O', 'I', 'Z'};

inline void save_noise(const NoiseRealization& noise, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_noise: cannot open " + path);
    out.write(kNoiseMagic, 8);
    const SpaceTimeGrid& g = noise.grid();
    const std::uint64_t seed = noise.seed();
    const std::int64_t nt = g.nt, nx = g.nx;
    const double T = g.T;
    out.write(reinterpret_cast<const char*>(&T), sizeof(T));
    out.write(reinterpret_cast<const char*>(&nt), sizeof(nt));
    out.write(reinterpret_cast<const char*>(&nx), sizeof(nx));
    out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
    out.write(reinterpret_cast<const char*>(noise.increments().data()),
              static_cast<std::streamsize>(noise.increments().size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_noise: write failed for " + path);
}

inline NoiseRealization load_noise(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_noise: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kNoiseMagic, 8) != 0)
        throw std::runtime_error("load_noise: bad magic in " + path);
    double T;
    std::int64_t nt, nx;
    std::uint64_t seed;
    in.read(reinterpret_cast<char*>(&T), sizeof(T));
    in.read(reinterpret_cast<char*>(&nt), sizeof(nt));
    in.read(reinterpret_cast<char*>(&nx), sizeof(nx));
    in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    if (!in || nt < 2 || nx < 2 || !(T > 0.0)) throw std::runtime_error("load_noise: bad header in " + path);
    SpaceTimeGrid grid{T, static_cast<int>(nt), static_cast<int>(nx)};
    std::vector<double> inc(static_cast<std::size_t>(nt) * nx);
    in.read(reinterpret_cast<char*>(inc.data()), static_cast<std::streamsize>(inc.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_noise: truncated payload in " + path);
    return NoiseRealization(grid, seed, std::move(inc));
}

}  // namespace spdelab
