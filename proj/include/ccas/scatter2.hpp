#pragma once

#include <utility>

#include "ccas/scatter1.hpp"

namespace ccas {

// Two-layer self-energy matrix with its eigenvalues (the dressed collective
// states). The off-diagonal phases depend on the inter-layer distance; only
// s12*s21 enters the eigenvalues.
struct SelfEnergyMatrix2 {
    Complex s11{}, s12{}, s21{}, s22{};
    Complex sigma_plus{}, sigma_minus{};
    bool degenerate = false;
    bool divergent = false;
};

namespace detail {

inline void require_two_layers(const ModelParams& p) {
    p.validate();
    if (p.layers.size() != 2)
        throw std::invalid_argument("expected exactly two layers");
}

// Sum over folded branches of the phase-carrying Green's function.
inline GreenValue green_branch_sum(double energy, const Momentum2& k, int dx,
                                   const ModelParams& p) {
    GreenValue sum;
    for (int l = 0; l < p.d; ++l) {
        const GreenValue g = lattice_green_phase(
            energy, fold_momentum(k.ky, l, p.d), dx, p);
        sum.divergent = sum.divergent || g.divergent;
        sum.value += g.value;
    }
    return sum;
}

}  // namespace detail

// Eigenvalues of the 2x2 self-energy matrix, principal square root, ordered
// by descending real part (ties broken by descending imaginary part).
inline std::pair<Complex, Complex> sigma_pm(const SelfEnergyMatrix2& m) {
    if (m.divergent)
        throw std::domain_error("sigma_pm: self-energy matrix diverges");
    const Complex tr = m.s11 + m.s22;
    const Complex diff = m.s11 - m.s22;
    const Complex disc = std::sqrt(diff * diff + 4.0 * m.s12 * m.s21);
    Complex plus = 0.5 * (tr + disc);
    Complex minus = 0.5 * (tr - disc);
    if (plus.real() < minus.real() ||
        (plus.real() == minus.real() && plus.imag() < minus.imag()))
        std::swap(plus, minus);
    return {plus, minus};
}

// Sigma_ij = (O_i O_j* / d) e^{-i kx (x_i - x_j)} Sum_l G(eps_k, p_l, x_i - x_j).
// Diagonals reduce to the single-layer self-energy of each layer alone.
inline SelfEnergyMatrix2 sigma_matrix(const Momentum2& k,
                                      const ModelParams& p) {
    detail::require_two_layers(p);
    const double energy = dispersion(k, p);
    SelfEnergyMatrix2 m;
    Complex* slots[2][2] = {{&m.s11, &m.s12}, {&m.s21, &m.s22}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const LayerSpec& li = p.layers[i];
            const LayerSpec& lj = p.layers[j];
            const int dx = li.x - lj.x;
            const GreenValue gsum =
                detail::green_branch_sum(energy, k, dx, p);
            m.divergent = m.divergent || gsum.divergent;
            *slots[i][j] = li.omega * std::conj(lj.omega) / double(p.d) *
                           std::polar(1.0, -k.kx * dx) * gsum.value;
        }
    if (!m.divergent) {
        const auto [plus, minus] = sigma_pm(m);
        m.sigma_plus = plus;
        m.sigma_minus = minus;
        m.degenerate = std::abs(plus - minus) <
                       1e-10 * (std::abs(plus) + std::abs(minus));
    }
    return m;
}

// Spin-wave amplitudes of the two layers and the J_s auxiliaries.
struct TwoLayerAmplitudes {
    Complex beta1{}, beta2{};
    Complex j1{}, j2{};
    double delta_onshell = 0.0;  // eps_k - omega_a
    bool direct_solve_fallback = false;
    bool divergent = false;
};

// Direct 2x2 solve of (Delta_k - Sigma) beta = Omega / 2pi; free of the
// removable eigenvalue-splitting singularity of the partial-fraction form.
inline std::pair<Complex, Complex> beta_two_direct(const SelfEnergyMatrix2& m,
                                                   double delta_k,
                                                   const Complex& omega1,
                                                   const Complex& omega2) {
    const Complex det =
        (delta_k - m.s11) * (delta_k - m.s22) - m.s12 * m.s21;
    const Complex b1 =
        (omega1 * (delta_k - m.s22) + omega2 * m.s12) / (2.0 * kPi * det);
    const Complex b2 =
        (omega2 * (delta_k - m.s11) + omega1 * m.s21) / (2.0 * kPi * det);
    return {b1, b2};
}

inline TwoLayerAmplitudes beta_two(const Momentum2& k, const ModelParams& p) {
    detail::require_two_layers(p);
    TwoLayerAmplitudes amps;
    const SelfEnergyMatrix2 m = sigma_matrix(k, p);
    amps.delta_onshell = dispersion(k, p) - p.omega_a();
    if (m.divergent) {
        amps.divergent = true;
        return amps;
    }
    const Complex o1 = p.layers[0].omega;
    const Complex o2 = p.layers[1].omega;
    const double energy = dispersion(k, p);
    // J_s = Sigma_(3-s)(3-s) - (O_(3-s)/O_s) Sigma_s(3-s), written with the
    // coupling ratio cancelled so O_s = 0 stays finite.
    const int dx12 = p.layers[0].x - p.layers[1].x;
    const Complex gee12 = detail::green_branch_sum(energy, k, dx12, p).value;
    const Complex gee21 = detail::green_branch_sum(energy, k, -dx12, p).value;
    amps.j1 = m.s22 - std::norm(o2) / double(p.d) *
                          std::polar(1.0, -k.kx * dx12) * gee12;
    amps.j2 = m.s11 - std::norm(o1) / double(p.d) *
                          std::polar(1.0, k.kx * dx12) * gee21;
    if (m.degenerate) {
        amps.direct_solve_fallback = true;
        std::tie(amps.beta1, amps.beta2) =
            beta_two_direct(m, amps.delta_onshell, o1, o2);
        return amps;
    }
    const Complex split = m.sigma_plus - m.sigma_minus;
    auto partial_fraction = [&](const Complex& omega, const Complex& js) {
        return omega / (2.0 * kPi * split) *
               ((m.sigma_plus - js) / (amps.delta_onshell - m.sigma_plus) -
                (m.sigma_minus - js) / (amps.delta_onshell - m.sigma_minus));
    };
    amps.beta1 = partial_fraction(o1, amps.j1);
    amps.beta2 = partial_fraction(o2, amps.j2);
    return amps;
}

// On-shell T-matrix coefficient for two layers. Depends on the outgoing
// longitudinal momentum through the layer phase factors:
//   u = (1/d) Sum_s e^{-i (kx_out - kx) x_s} O_s* beta_s.
inline Complex u_two(const Momentum2& k, double kx_out, const ModelParams& p) {
    const TwoLayerAmplitudes amps = beta_two(k, p);
    if (amps.divergent) return {};
    Complex u{};
    const Complex betas[2] = {amps.beta1, amps.beta2};
    for (int s = 0; s < 2; ++s)
        u += std::polar(1.0, -(kx_out - k.kx) * p.layers[s].x) *
             std::conj(p.layers[s].omega) * betas[s];
    return u / double(p.d);
}

// Two conventions for assembling the total two-layer probability:
//  - paper: direction-independent weights, forward transverse branch counted
//    once and each |l| >= 1 twice, u taken on the +klx branch;
//  - directional: u evaluated at sign(l) * klx per branch, l = 0 forward only
//    (the 2d-1 outgoing packets).
enum class RTwoMode { paper, directional };

inline ScatteringResult r_two(const Momentum2& k0, const ModelParams& p,
                              RTwoMode mode) {
    detail::require_two_layers(p);
    detail::require_incident_open(k0);
    ScatteringResult res;
    const SelfEnergyMatrix2 m = sigma_matrix(k0, p);
    res.divergent = m.divergent;
    const std::vector<Channel> chans = open_channels(k0, p);
    if (res.divergent) {
        for (const Channel& c : chans) res.channels.emplace_back(c, 0.0);
        return res;
    }
    res.lamb_shift = m.sigma_plus.real();
    res.linewidth = -m.sigma_plus.imag();
    const double flux0 = std::abs(std::sin(k0.kx));
    for (const Channel& c : chans) {
        double pl = 0.0;
        if (c.open()) {
            const double kout = (mode == RTwoMode::directional && c.l < 0)
                                    ? -c.klx
                                    : c.klx;
            const double u2 = std::norm(u_two(k0, kout, p));
            pl = u2 / (4.0 * p.xi * p.xi * flux0 * std::sin(c.klx));
        }
        res.channels.emplace_back(c, pl);
        res.total += pl;
    }
    return res;
}

// Detunings of the two scattering maxima,
// Delta_pm = Re Sigma_pm + 2 xi (cos kx + cos ky).
inline std::pair<double, double> peak_positions(const Momentum2& k,
                                                const ModelParams& p) {
    const SelfEnergyMatrix2 m = sigma_matrix(k, p);
    if (m.divergent)
        throw std::domain_error("peak_positions: self-energy matrix diverges");
    const double bare = 2.0 * p.xi * (std::cos(k.kx) + std::cos(k.ky));
    return {m.sigma_plus.real() + bare, m.sigma_minus.real() + bare};
}

}  // namespace ccas
