#pragma once

#include <utility>
#include <vector>

#include "ccas/green.hpp"

namespace ccas {

// Per-channel scattering probabilities plus the total R. Divergent points
// carry total = 0 and all P_l = 0; evanescent channels contribute 0.
struct ScatteringResult {
    std::vector<std::pair<Channel, double>> channels;  // (branch, P_l)
    double total = 0.0;
    double lamb_shift = 0.0;  // Re Sigma
    double linewidth = 0.0;   // -Im Sigma
    bool divergent = false;
};

namespace detail {

// On-shell denominator Delta - 2 xi (cos kx + cos ky) - Sigma,
// written as eps_k - omega_a - Sigma with the cavity frequency at zero.
inline Complex resonance_denominator(const Momentum2& k, const ModelParams& p,
                                     const Complex& sigma) {
    return Complex(dispersion(k, p) - p.omega_a(), 0.0) - sigma;
}

inline void require_single_layer(const ModelParams& p) {
    p.validate();
    if (p.layers.size() != 1)
        throw std::invalid_argument("expected exactly one layer");
}

inline void require_incident_open(const Momentum2& k0) {
    if (std::abs(std::abs(std::cos(k0.kx)) - 1.0) <= kBandEdgeTol)
        throw std::domain_error(
            "incident momentum at a band edge (sin kx = 0)");
}

}  // namespace detail

// Amplitude of the excited spin-wave state, (O/2pi) / (Delta_k - Sigma).
// Returns 0 when the self-energy diverges (the scattering shuts off).
inline Complex beta_coeff(const Momentum2& k, const ModelParams& p) {
    detail::require_single_layer(p);
    const SelfEnergy s = sigma_total(k, p, p.layers[0]);
    if (s.divergent) return {};
    return p.layers[0].omega / (2.0 * kPi) /
           detail::resonance_denominator(k, p, s.value);
}

// On-shell T-matrix coefficient for one layer,
// u = |O|^2 / (2 pi d [Delta - 2 xi (cos kx + cos ky) - Sigma]).
inline Complex u_one(const Momentum2& k, const ModelParams& p) {
    detail::require_single_layer(p);
    const SelfEnergy s = sigma_total(k, p, p.layers[0]);
    if (s.divergent) return {};
    return std::norm(p.layers[0].omega) / (2.0 * kPi * p.d) /
           detail::resonance_denominator(k, p, s.value);
}

// Probability scattered into open branch l: |u|^2 / (4 xi^2 |sin k0x sin klx|).
inline double p_channel(const Momentum2& k0, int l, const ModelParams& p) {
    detail::require_single_layer(p);
    detail::require_incident_open(k0);
    const Channel c = make_channel(k0, l, p.d);
    if (c.status == ChannelStatus::band_edge)
        throw std::domain_error("p_channel: branch at a band edge (sin klx = 0)");
    if (c.status == ChannelStatus::evanescent)
        throw std::invalid_argument("p_channel: branch is not open");
    const Complex u = u_one(k0, p);
    return std::norm(u) /
           (4.0 * p.xi * p.xi * std::abs(std::sin(k0.kx) * std::sin(c.klx)));
}

// Full one-layer scattering record at incident momentum k0.
inline ScatteringResult r_one(const Momentum2& k0, const ModelParams& p) {
    detail::require_single_layer(p);
    detail::require_incident_open(k0);
    ScatteringResult res;
    const SelfEnergy s = sigma_total(k0, p, p.layers[0]);
    res.divergent = s.divergent;
    const std::vector<Channel> chans = open_channels(k0, p);
    if (res.divergent) {
        for (const Channel& c : chans) res.channels.emplace_back(c, 0.0);
        return res;
    }
    res.lamb_shift = s.value.real();
    res.linewidth = -s.value.imag();
    const double u2 = std::norm(u_one(k0, p));
    const double flux0 = std::abs(std::sin(k0.kx));
    for (const Channel& c : chans) {
        double pl = 0.0;
        if (c.open())
            pl = u2 / (4.0 * p.xi * p.xi * flux0 * std::sin(c.klx));
        res.channels.emplace_back(c, pl);
        res.total += pl;
    }
    return res;
}

// Detuning at which R peaks: Delta = 2 xi (cos kx + cos ky) + Re Sigma.
inline double resonance_detuning(const Momentum2& k, const ModelParams& p) {
    detail::require_single_layer(p);
    const SelfEnergy s = sigma_total(k, p, p.layers[0]);
    if (s.divergent)
        throw std::domain_error("resonance_detuning: self-energy diverges");
    return 2.0 * p.xi * (std::cos(k.kx) + std::cos(k.ky)) + s.value.real();
}

}  // namespace ccas
