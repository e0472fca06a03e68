#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ccas/lattice.hpp"

namespace ccas {

// Exact stationary scattering solution on the Bloch-reduced strip: d folded
// 1D channels, each coupled with strength O_s/sqrt(d) to one atomic amplitude
// per layer at the layer columns. Plane-wave/evanescent solutions are imposed
// outside the columns, so there is no discretization error in x.
//
// reflection[m] / transmission[m] are the coefficients of e^{-i k_m x} /
// e^{+i k_m x} with the incident wave entering channel 0 with coefficient 1
// (transmission therefore includes the unscattered beam). Closed channels
// carry zeros.
struct StripSolution {
    std::vector<Channel> channels;  // m = 0..d-1
    std::vector<Complex> reflection;
    std::vector<Complex> transmission;
    std::vector<Complex> atom_amps;  // one per layer, input order
    double rcond = 0.0;
};

namespace detail {

// z^n for the channel's longitudinal root: e^{i klx n} on open branches,
// sign(A)^n e^{-mu n} on evanescent ones.
inline Complex strip_zpow(const Channel& c, long n) {
    if (c.status == ChannelStatus::open) return std::polar(1.0, c.klx * n);
    const double mag = std::exp(-c.mu * static_cast<double>(n));
    const double sgn = (c.a < 0.0 && ((n % 2) != 0)) ? -1.0 : 1.0;
    return Complex(sgn * mag, 0.0);
}

}  // namespace detail

inline StripSolution solve_strip_exact(const Momentum2& k0,
                                       const ModelParams& p) {
    p.validate();
    if (!(k0.kx > 0.0 && k0.kx < kPi))
        throw std::domain_error("solve_strip_exact: incident kx must lie in (0, pi)");
    StripSolution sol;
    sol.channels.reserve(p.d);
    for (int m = 0; m < p.d; ++m) {
        Channel c = make_channel(k0, m, p.d);
        if (c.status == ChannelStatus::band_edge)
            throw std::domain_error(
                "solve_strip_exact: channel at a band edge");
        sol.channels.push_back(c);
    }

    const int d = p.d;
    const int nlayers = static_cast<int>(p.layers.size());
    const double e0 = dispersion(k0, p);
    const double root_d = std::sqrt(static_cast<double>(d));
    const double xi = p.xi;
    const Complex eatom(e0 - p.omega_a(), 0.0);

    const int xa = nlayers == 2 ? std::min(p.layers[0].x, p.layers[1].x)
                                : p.layers[0].x;
    const int xb = nlayers == 2 ? std::max(p.layers[0].x, p.layers[1].x)
                                : p.layers[0].x;
    const bool split_region = xb > xa;
    const long w = xb - xa;

    auto inc = [&](long x) { return std::polar(1.0, k0.kx * x); };

    // unknown layout: r_m | (a_m | b_m when two regions) | t_m | B_s
    const int n_r = 0;
    const int n_a = d;
    const int n_b = split_region ? 2 * d : 0;
    const int n_t = split_region ? 3 * d : d;
    const int n_atom = split_region ? 4 * d : 2 * d;
    const int n = n_atom + nlayers;

    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);

    // atom amplitude coupled at each column; layer s sits at p.layers[s].x
    auto atoms_at = [&](int col) {
        std::vector<int> out;
        for (int s = 0; s < nlayers; ++s)
            if (p.layers[s].x == col) out.push_back(s);
        return out;
    };

    int row = 0;
    for (int m = 0; m < d; ++m) {
        const Channel& c = sol.channels[m];
        const Complex z = detail::strip_zpow(c, 1);
        const double a2xi = -2.0 * xi * c.a;
        const Complex inc0 = (m == 0) ? inc(xa) : Complex{};
        const Complex incm1 = (m == 0) ? inc(xa - 1) : Complex{};
        if (split_region) {
            const Complex zw = detail::strip_zpow(c, w);
            const Complex zw1 = detail::strip_zpow(c, w - 1);
            // value match at xa: r - a - b z^w = -inc(xa)
            mat(row, n_r + m) = 1.0;
            mat(row, n_a + m) = -1.0;
            mat(row, n_b + m) = -zw;
            rhs(row) = -inc0;
            ++row;
            // lattice equation at xa
            mat(row, n_a + m) = a2xi + xi * z;
            mat(row, n_b + m) = a2xi * zw + xi * zw1;
            mat(row, n_r + m) = xi * z;
            for (int s : atoms_at(xa))
                mat(row, n_atom + s) = -std::conj(p.layers[s].omega) / root_d;
            rhs(row) = -xi * incm1;
            ++row;
            // value match at xb: a z^w + b - t = 0
            mat(row, n_a + m) = zw;
            mat(row, n_b + m) = 1.0;
            mat(row, n_t + m) = -1.0;
            ++row;
            // lattice equation at xb
            mat(row, n_t + m) = a2xi + xi * z;
            mat(row, n_a + m) = xi * zw1;
            mat(row, n_b + m) = xi * z;
            for (int s : atoms_at(xb))
                mat(row, n_atom + s) = -std::conj(p.layers[s].omega) / root_d;
            ++row;
        } else {
            // value match at the single column: r - t = -inc(xa)
            mat(row, n_r + m) = 1.0;
            mat(row, n_t + m) = -1.0;
            rhs(row) = -inc0;
            ++row;
            // lattice equation at the column
            mat(row, n_t + m) = a2xi + xi * z;
            mat(row, n_r + m) = xi * z;
            for (int s : atoms_at(xa))
                mat(row, n_atom + s) = -std::conj(p.layers[s].omega) / root_d;
            rhs(row) = -xi * incm1;
            ++row;
        }
    }
    for (int s = 0; s < nlayers; ++s) {
        mat(row, n_atom + s) = eatom;
        const Complex g = -p.layers[s].omega / root_d;
        for (int m = 0; m < d; ++m) {
            if (split_region) {
                if (p.layers[s].x == xa) {
                    const Complex zw = detail::strip_zpow(sol.channels[m], w);
                    mat(row, n_a + m) += g;
                    mat(row, n_b + m) += g * zw;
                } else {
                    mat(row, n_t + m) += g;
                }
            } else {
                mat(row, n_t + m) += g;
            }
        }
        ++row;
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(mat);
    sol.rcond = lu.rcond();
    if (!(sol.rcond > 1e-12))
        throw std::runtime_error(
            "solve_strip_exact: matching system ill-conditioned (rcond " +
            std::to_string(sol.rcond) + ")");
    const Eigen::VectorXcd u = lu.solve(rhs);

    sol.reflection.assign(d, Complex{});
    sol.transmission.assign(d, Complex{});
    for (int m = 0; m < d; ++m) {
        const Channel& c = sol.channels[m];
        if (!c.open()) continue;
        sol.reflection[m] = u(n_r + m) * detail::strip_zpow(c, xa);
        sol.transmission[m] = u(n_t + m) * detail::strip_zpow(c, -xb);
    }
    sol.atom_amps.resize(nlayers);
    for (int s = 0; s < nlayers; ++s) sol.atom_amps[s] = u(n_atom + s);
    return sol;
}

// Group-velocity-normalized probabilities: P = |amp|^2 sin(klx) / sin(k0x).
// The forward channel splits into the full transmission |T|^2 and the
// scattered part |T - 1|^2.
struct FluxProbabilities {
    std::vector<double> backward;           // per channel m
    std::vector<double> forward_scattered;  // per channel m
    std::vector<double> transmission;       // per channel m, |T|^2 flux
    double scattered_total = 0.0;  // backward + forward_scattered, all m
    double unitarity_sum = 0.0;    // (|R|^2 + |T|^2) flux total, should be 1
};

inline FluxProbabilities flux_probabilities(const StripSolution& sol,
                                            const Momentum2& k0,
                                            const ModelParams& p) {
    (void)p;
    FluxProbabilities f;
    const int d = static_cast<int>(sol.channels.size());
    f.backward.assign(d, 0.0);
    f.forward_scattered.assign(d, 0.0);
    f.transmission.assign(d, 0.0);
    const double v0 = std::sin(k0.kx);
    for (int m = 0; m < d; ++m) {
        const Channel& c = sol.channels[m];
        if (!c.open()) continue;
        const double vr = std::sin(c.klx) / v0;
        const Complex tsc =
            sol.transmission[m] - (m == 0 ? Complex(1.0, 0.0) : Complex{});
        f.backward[m] = std::norm(sol.reflection[m]) * vr;
        f.forward_scattered[m] = std::norm(tsc) * vr;
        f.transmission[m] = std::norm(sol.transmission[m]) * vr;
        f.scattered_total += f.backward[m] + f.forward_scattered[m];
        f.unitarity_sum +=
            (std::norm(sol.reflection[m]) + std::norm(sol.transmission[m])) *
            vr;
    }
    return f;
}

}  // namespace ccas
