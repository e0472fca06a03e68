#pragma once

#include <vector>

#include "ccas/params.hpp"

namespace ccas {

enum class ChannelStatus { open, evanescent, band_edge };

// One folded outgoing branch. klx stores the magnitude of the longitudinal
// momentum (the sign of l carries the propagation direction); mu is the
// decay constant of an evanescent branch (cosh mu = |A_l|).
struct Channel {
    int l = 0;
    double ky_out = 0.0;
    double a = 0.0;
    double klx = 0.0;
    double mu = 0.0;
    ChannelStatus status = ChannelStatus::open;

    bool open() const { return status == ChannelStatus::open; }
};

// Single-photon band energy, cavity frequency pinned to zero.
inline double dispersion(const Momentum2& k, const ModelParams& p) {
    return -2.0 * p.xi * (std::cos(k.kx) + std::cos(k.ky));
}

// Transverse momentum of branch l, folded into (-pi, pi].
// Periodic in l with period d; the l = 0 branch is the identity.
inline double fold_momentum(double ky, int l, int d) {
    return reduce_to_bz(ky + 2.0 * kPi * std::abs(l) / d);
}

// A_l = cos kx + cos ky - cos p_l(ky); the longitudinal momentum of branch l
// satisfies cos k_lx = A_l when |A_l| <= 1.
inline double channel_a(const Momentum2& k0, int l, int d) {
    return std::cos(k0.kx) + std::cos(k0.ky) -
           std::cos(fold_momentum(k0.ky, l, d));
}

inline Channel make_channel(const Momentum2& k0, int l, int d) {
    Channel c;
    c.l = l;
    c.ky_out = fold_momentum(k0.ky, l, d);
    c.a = channel_a(k0, l, d);
    if (std::abs(std::abs(c.a) - 1.0) <= kBandEdgeTol) {
        c.status = ChannelStatus::band_edge;
        c.klx = c.a > 0.0 ? 0.0 : kPi;
    } else if (std::abs(c.a) < 1.0) {
        c.status = ChannelStatus::open;
        c.klx = std::acos(c.a);
    } else {
        c.status = ChannelStatus::evanescent;
        c.mu = std::acosh(std::abs(c.a));
    }
    return c;
}

// All 2d-1 outgoing branches, l = -(d-1) .. d-1 in ascending order.
// Closed branches are reported with their status, never skipped.
inline std::vector<Channel> open_channels(const Momentum2& k0,
                                          const ModelParams& p) {
    std::vector<Channel> out;
    out.reserve(2 * p.d - 1);
    for (int l = -(p.d - 1); l <= p.d - 1; ++l)
        out.push_back(make_channel(k0, l, p.d));
    return out;
}

}  // namespace ccas
