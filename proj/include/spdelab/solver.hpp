#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spdelab/drift.hpp"
#include "spdelab/grid.hpp"
#include "spdelab/noise.hpp"

namespace spdelab {

/// Grid values of u(t_i, x_j) together with the inputs that produced them.
struct SolutionField {
    SpaceTimeGrid grid;
    std::vector<double> values;  // (nt+1) x (nx+1), row-major
    DriftSpec drift;
    std::uint64_t noise_seed = 0;
    std::string u0_desc;

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * (grid.nx + 1) + j]; }

    /// Bilinear interpolation on the space-time grid.
    double interp(double t, double x) const {
        if (t < -1e-12 || t > grid.T + 1e-12 || x < -1e-12 || x > 1.0 + 1e-12)
            throw std::domain_error("SolutionField::interp: point outside the grid");
        const double dt = grid.dt(), dx = grid.dx();
        double ti = std::min(std::max(t, 0.0), grid.T) / dt;
        double xj = std::min(std::max(x, 0.0), 1.0) / dx;
        int i0 = std::min(static_cast<int>(ti), grid.nt - 1);
        int j0 = std::min(static_cast<int>(xj), grid.nx - 1);
        const double ft = ti - i0, fx = xj - j0;
        return (1.0 - ft) * ((1.0 - fx) * at(i0, j0) + fx * at(i0, j0 + 1)) +
               ft * ((1.0 - fx) * at(i0 + 1, j0) + fx * at(i0 + 1, j0 + 1));
    }
};

namespace detail {

/// Prefactored Thomas solve for A = I - dt * L with the ghost-mirror Neumann
/// Laplacian L (u_{-1} = u_1, u_{nx+1} = u_{nx-1}). A is constant across time
/// steps, so the forward-elimination coefficients are computed once.
class ImplicitHeatOperator {
public:
    ImplicitHeatOperator(const SpaceTimeGrid& grid) : n_(grid.nx + 1), sub_(n_), cprime_(n_), inv_denom_(n_) {
        const double mu = grid.dt() / (grid.dx() * grid.dx());
        std::vector<double> diag(n_, 1.0 + 2.0 * mu), super(n_, -mu);
        sub_.assign(n_, -mu);
        super[0] = -2.0 * mu;
        sub_[n_ - 1] = -2.0 * mu;
        cprime_[0] = super[0] / diag[0];
        inv_denom_[0] = 1.0 / diag[0];
        for (int j = 1; j < n_; ++j) {
            const double denom = diag[j] - sub_[j] * cprime_[j - 1];
            if (!(std::abs(denom) > 0.0)) throw std::runtime_error("ImplicitHeatOperator: singular system");
            inv_denom_[j] = 1.0 / denom;
            cprime_[j] = super[j] * inv_denom_[j];
        }
    }

    /// Solve A x = rhs in place.
    void solve(std::vector<double>& rhs) const {
        rhs[0] *= inv_denom_[0];
        for (int j = 1; j < n_; ++j) rhs[j] = (rhs[j] - sub_[j] * rhs[j - 1]) * inv_denom_[j];
        for (int j = n_ - 2; j >= 0; --j) rhs[j] -= cprime_[j] * rhs[j + 1];
    }

private:
    int n_;
    std::vector<double> sub_, cprime_, inv_denom_;
};

/// Noise cell feeding node j; the boundary nodes take the increment of the
/// adjacent cell, which is the method-of-images treatment of the forcing.
inline int cell_for_node(int j, int nx) { return j < nx ? j : nx - 1; }

}  // namespace detail

/// Semi-implicit mild-solution scheme:
///   (I - dt * L) u^{i+1} = u^i + dt * b(u^i) + dW_i / dx
/// with implicit diffusion and explicit drift and noise. Deterministic in
/// (grid, drift, u0, noise).
inline SolutionField solve(const SpaceTimeGrid& grid, const DriftSpec& drift,
                           const std::function<double(double)>& u0, const NoiseRealization& noise,
                           const std::string& u0_desc = "custom") {
    grid.validate();
    if (!(noise.grid() == grid)) throw std::invalid_argument("solve: noise grid mismatch");
    if (!u0) throw std::invalid_argument("solve: u0 must be callable");
    const int nn = grid.nx + 1;
    const double dt = grid.dt();
    const double inv_dx = 1.0 / grid.dx();
    detail::ImplicitHeatOperator op(grid);

    SolutionField field{grid, std::vector<double>(static_cast<std::size_t>(grid.nt + 1) * nn),
                        drift, noise.seed(), u0_desc};
    std::vector<double> state(nn), rhs(nn);
    for (int j = 0; j < nn; ++j) state[j] = u0(grid.space_node(j));
    std::copy(state.begin(), state.end(), field.values.begin());

    for (int i = 0; i < grid.nt; ++i) {
        for (int j = 0; j < nn; ++j) {
            const double bval = drift.b(state[j]);
            if (!std::isfinite(bval))
                throw std::runtime_error("solve: drift returned non-finite value " + std::to_string(bval) +
                                         " at u = " + std::to_string(state[j]));
            rhs[j] = state[j] + dt * bval + noise.at(i, detail::cell_for_node(j, grid.nx)) * inv_dx;
        }
        op.solve(rhs);
        state.swap(rhs);
        std::copy(state.begin(), state.end(),
                  field.values.begin() + static_cast<std::size_t>(i + 1) * nn);
    }
    return field;
}

/// Linearized equation along a base solution:
///   (I - dt * L) v^{i+1} = v^i + dt * bprime(u^i) v^i + dt * h
/// with v(0,.) = 0. The source h enters through the same cell-to-node loading
/// as the noise, so a Cameron-Martin shift of the noise and this scheme
/// produce identical sensitivities.
inline SolutionField solve_linearized(const SpaceTimeGrid& grid, const SolutionField& base,
                                      const std::function<double(double)>& bprime, const Direction& h) {
    grid.validate();
    if (!(base.grid == grid)) throw std::invalid_argument("solve_linearized: base grid mismatch");
    if (!bprime) throw std::invalid_argument("solve_linearized: bprime must be callable");
    const int nn = grid.nx + 1;
    const double dt = grid.dt();
    detail::ImplicitHeatOperator op(grid);

    SolutionField field{grid, std::vector<double>(static_cast<std::size_t>(grid.nt + 1) * nn),
                        DriftSpec{}, base.noise_seed, "linearized"};
    std::vector<double> state(nn, 0.0), rhs(nn);
    for (int i = 0; i < grid.nt; ++i) {
        const double tmid = grid.cell_t_mid(i);
        for (int j = 0; j < nn; ++j) {
            const double src = h(tmid, grid.cell_x_mid(detail::cell_for_node(j, grid.nx)));
            rhs[j] = state[j] + dt * bprime(base.at(i, j)) * state[j] + dt * src;
        }
        op.solve(rhs);
        state.swap(rhs);
        std::copy(state.begin(), state.end(),
                  field.values.begin() + static_cast<std::size_t>(i + 1) * nn);
    }
    return field;
}

// Initial-condition catalog for experiment configs and replay.
inline std::function<double(double)> u0_by_name(const std::string& name) {
    if (name == "zero") return [](double) { return 0.0; };
    if (name == "cos-pi") return [](double x) { return std::cos(3.141592653589793 * x); };
    if (name == "bump") return [](double x) { return std::sin(3.141592653589793 * x); };
    throw std::invalid_argument("u0_by_name: unknown initial condition '" + name + "'");
}

/// CSV export: one (t, x, u) row per grid node.
inline void write_field_csv(const SolutionField& field, std::ostream& out) {
    out << "t,x,u\n";
    for (int i = 0; i <= field.grid.nt; ++i)
        for (int j = 0; j <= field.grid.nx; ++j)
            out << field.grid.time_node(i) << ',' << field.grid.space_node(j) << ','
                << field.at(i, j) << '\n';
}

// Binary replay header: enough to regenerate the field from catalogs.
inline constexpr char kFieldMagic[8] = {'S', 'P', 'D', 'E', 'F', 'L', 'D', '0'};

struct ReplayHeader {
    SpaceTimeGrid grid;
    std::uint64_t noise_seed;
    std::string drift_name;
    double drift_param;
    std::string u0_desc;
};

inline void save_replay(const SolutionField& field, double drift_param, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_replay: cannot open " + path);
    out.write(kFieldMagic, 8);
    const std::int64_t nt = field.grid.nt, nx = field.grid.nx;
    out.write(reinterpret_cast<const char*>(&field.grid.T), sizeof(double));
    out.write(reinterpret_cast<const char*>(&nt), sizeof(nt));
    out.write(reinterpret_cast<const char*>(&nx), sizeof(nx));
    out.write(reinterpret_cast<const char*>(&field.noise_seed), sizeof(field.noise_seed));
    out.write(reinterpret_cast<const char*>(&drift_param), sizeof(drift_param));
    auto write_string = [&](const std::string& s) {
        const std::uint32_t len = static_cast<std::uint32_t>(s.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(s.data(), len);
    };
    write_string(field.drift.name);
    write_string(field.u0_desc);
    if (!out) throw std::runtime_error("save_replay: write failed for " + path);
}

inline ReplayHeader load_replay(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_replay: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFieldMagic, 8) != 0)
        throw std::runtime_error("load_replay: bad magic in " + path);
    ReplayHeader h;
    std::int64_t nt, nx;
    in.read(reinterpret_cast<char*>(&h.grid.T), sizeof(double));
    in.read(reinterpret_cast<char*>(&nt), sizeof(nt));
    in.read(reinterpret_cast<char*>(&nx), sizeof(nx));
    in.read(reinterpret_cast<char*>(&h.noise_seed), sizeof(h.noise_seed));
    in.read(reinterpret_cast<char*>(&h.drift_param), sizeof(h.drift_param));
    auto read_string = [&]() {
        std::uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        std::string s(len, '\0');
        in.read(s.data(), len);
        return s;
    };
    h.grid.nt = static_cast<int>(nt);
    h.grid.nx = static_cast<int>(nx);
    h.drift_name = read_string();
    h.u0_desc = read_string();
    if (!in) throw std::runtime_error("load_replay: truncated header in " + path);
    return h;
}

/// Re-run the solve described by a replay header.
inline SolutionField replay(const ReplayHeader& h) {
    const NoiseRealization noise = sample_noise(h.grid, h.noise_seed);
    return solve(h.grid, drift_by_name(h.drift_name, h.drift_param), u0_by_name(h.u0_desc), noise,
                 h.u0_desc);
}

}  // namespace spdelab
