#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ccas {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// Branches with ||A_l| - 1| at or below this count as band edges.
inline constexpr double kBandEdgeTol = 1e-9;

// Map an angle into the first Brillouin zone (-pi, pi].
inline double reduce_to_bz(double k) {
    double r = std::fmod(k + kPi, 2.0 * kPi);
    if (r <= 0.0) r += 2.0 * kPi;
    return r - kPi;
}

// A 2D Bloch momentum; components are reduced into (-pi, pi] on construction.
struct Momentum2 {
    double kx = 0.0;
    double ky = 0.0;

    Momentum2() = default;
    Momentum2(double kx_in, double ky_in)
        : kx(reduce_to_bz(kx_in)), ky(reduce_to_bz(ky_in)) {}
};

// One periodic row of atoms: integer column position and atom-photon coupling.
struct LayerSpec {
    int x = 0;
    Complex omega{0.0, 0.0};
};

// Lattice and atom parameters. The cavity frequency is the energy zero
// throughout; the atom frequency enters only through delta = omega_c - omega_a.
struct ModelParams {
    double xi = 1.0;    // nearest-neighbour hopping, > 0
    double delta = 0.0; // photon-atom detuning
    int d = 1;          // atomic period along y
    std::vector<LayerSpec> layers;

    double omega_a() const { return -delta; }

    // Two layers occupying the same column with the same coupling.
    bool degenerate_layers() const {
        return layers.size() == 2 && layers[0].x == layers[1].x &&
               layers[0].omega == layers[1].omega;
    }

    void validate() const {
        if (!(xi > 0.0))
            throw std::invalid_argument("ModelParams: xi must be > 0");
        if (d < 1)
            throw std::invalid_argument("ModelParams: d must be >= 1");
        if (layers.empty() || layers.size() > 2)
            throw std::invalid_argument("ModelParams: need 1 or 2 layers");
    }
};

}  // namespace ccas
