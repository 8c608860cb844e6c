#pragma once

#include <cmath>
#include <stdexcept>

namespace spdelab {

/// Uniform discretization of [0,T] x [0,1] shared by all field computations.
/// Time nodes t_i = i*dt (i = 0..nt), space nodes x_j = j*dx (j = 0..nx);
/// noise and quadrature anchors sit at cell centers.
struct SpaceTimeGrid {
    double T = 1.0;
    int nt = 512;
    int nx = 64;

    double dt() const { return T / nt; }
    double dx() const { return 1.0 / nx; }
    double time_node(int i) const { return i * dt(); }
    double space_node(int j) const { return j * dx(); }
    double cell_t_mid(int i) const { return (i + 0.5) * dt(); }
    double cell_x_mid(int j) const { return (j + 0.5) * dx(); }

    bool operator==(const SpaceTimeGrid&) const = default;

    void validate() const {
        if (!(T > 0.0) || !std::isfinite(T)) throw std::domain_error("SpaceTimeGrid: T must be positive");
        if (nt < 2 || nx < 2) throw std::domain_error("SpaceTimeGrid: nt and nx must be >= 2");
    }
};

}  // namespace spdelab
