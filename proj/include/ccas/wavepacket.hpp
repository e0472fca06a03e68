#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "ccas/lattice.hpp"

namespace ccas {

// Time-domain oracle setup: a Gaussian single-photon packet on a periodic
// Lx x Ly lattice (Ly a multiple of d), evolved under the full Hamiltonian
// with a Chebyshev expansion of the propagator, then decomposed into folded
// transverse channels split by the sign of the longitudinal momentum.
struct WavePacketSpec {
    int lx = 2048;
    int ly = 120;
    Momentum2 k0{kPi / 8, kPi / 4};
    double sigma_x = 0.015;  // momentum-space widths
    double sigma_y = 0.015;
    double x0 = 0.0;  // initial packet center
    double y0 = 0.0;
    double travel_fraction = 0.35;  // center travel distance / lx
    int chunks = 10;
    int guard = 32;          // columns near the x edges watched for wrap-around
    double guard_tol = 1e-6;
};

// Default desk-scale setup: layers are expected near lx/2, the packet starts
// half the travel distance to their left.
inline WavePacketSpec make_packet_spec(const ModelParams& p,
                                       const Momentum2& k0) {
    WavePacketSpec s;
    s.k0 = k0;
    s.ly = 40 * p.d;
    int xmin = p.layers[0].x;
    for (const auto& l : p.layers) xmin = std::min(xmin, l.x);
    s.x0 = xmin - 0.5 * s.travel_fraction * s.lx;
    s.y0 = s.ly / 2.0;
    return s;
}

struct ChannelPopulation {
    int m = 0;          // transverse branch index, 0..d-1
    int direction = 1;  // sign of the longitudinal momentum
    double probability = 0.0;
};

struct OracleReport {
    std::vector<ChannelPopulation> populations;  // all (m, +-), incl. forward
    double transmission_forward = 0.0;  // (m=0, +): beam plus forward scattering
    double atomic_residue = 0.0;
    double norm_drift = 0.0;
    double guard_max = 0.0;
    bool inconclusive = false;  // atomic residue too large to trust the split
};

// Photon amplitude field, row-major a[x * ly + y].
struct PacketField {
    int lx = 0;
    int ly = 0;
    std::vector<Complex> a;
};

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline void fft_pow2(std::vector<Complex>& v, int sign) {
    const std::size_t n = v.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * kPi / static_cast<double>(len);
        const Complex wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            Complex w{1.0, 0.0};
            for (std::size_t j = 0; j < len / 2; ++j) {
                const Complex u = v[i + j];
                const Complex t = v[i + j + len / 2] * w;
                v[i + j] = u + t;
                v[i + j + len / 2] = u - t;
                w *= wl;
            }
        }
    }
}

// Unitary 2D transform between real and momentum space; sign = -1 maps to
// momentum space, +1 back.
inline void transform2d(PacketField& f, int sign) {
    const int lx = f.lx, ly = f.ly;
    // y axis: plain DFT with a precomputed twiddle ring
    std::vector<Complex> ring(ly);
    for (int j = 0; j < ly; ++j)
        ring[j] = std::polar(1.0, sign * 2.0 * kPi * j / ly);
    const double ynorm = 1.0 / std::sqrt(static_cast<double>(ly));
#ifdef _OPENMP
#pragma omp parallel for
#endif
    for (int x = 0; x < lx; ++x) {
        std::vector<Complex> tmp(ly);
        for (int k = 0; k < ly; ++k) {
            Complex acc{};
            const std::int64_t kk = k;
            for (int y = 0; y < ly; ++y)
                acc += f.a[static_cast<std::size_t>(x) * ly + y] *
                       ring[static_cast<int>((kk * y) % ly)];
            tmp[k] = acc * ynorm;
        }
        for (int k = 0; k < ly; ++k)
            f.a[static_cast<std::size_t>(x) * ly + k] = tmp[k];
    }
    // x axis: radix-2 FFT on gathered columns
    const double xnorm = 1.0 / std::sqrt(static_cast<double>(lx));
#ifdef _OPENMP
#pragma omp parallel for
#endif
    for (int y = 0; y < ly; ++y) {
        std::vector<Complex> col(lx);
        for (int x = 0; x < lx; ++x)
            col[x] = f.a[static_cast<std::size_t>(x) * ly + y];
        fft_pow2(col, sign);
        for (int x = 0; x < lx; ++x)
            f.a[static_cast<std::size_t>(x) * ly + y] = col[x] * xnorm;
    }
}

// J_0..J_nmax by Miller's downward recurrence, normalized with
// J_0 + 2 sum J_2k = 1.
inline std::vector<double> bessel_j_array(double x, int nmax) {
    const int start = nmax + 20 + static_cast<int>(8.0 * std::cbrt(nmax + 1.0));
    std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for (int n = start; n >= 1; --n) {
        j[n - 1] = (2.0 * n / x) * j[n] - j[n + 1];
        if (std::abs(j[n - 1]) > 1e250) {
            for (int m = n - 1; m <= start + 1; ++m) j[m] *= 1e-250;
        }
    }
    double norm = j[0];
    for (int n = 2; n <= start; n += 2) norm += 2.0 * j[n];
    j.resize(nmax + 1);
    for (double& v : j) v /= norm;
    return j;
}

}  // namespace detail

// Transverse-channel / direction decomposition of a photon field. Momentum
// cells are binned to the nearest folded branch p_m(k0y); direction is the
// sign of kx. Populations sum to the field norm.
inline std::vector<ChannelPopulation> channel_populations(
    const PacketField& field, const Momentum2& k0, const ModelParams& p) {
    PacketField f = field;
    detail::transform2d(f, -1);
    std::vector<double> pop(static_cast<std::size_t>(2) * p.d, 0.0);
    for (int jx = 0; jx < f.lx; ++jx) {
        const double kx = reduce_to_bz(2.0 * kPi * jx / f.lx);
        const int dir = kx >= 0.0 ? 1 : -1;
        for (int jy = 0; jy < f.ly; ++jy) {
            const double ky = reduce_to_bz(2.0 * kPi * jy / f.ly);
            const double shift = reduce_to_bz(ky - k0.ky) * p.d / (2.0 * kPi);
            int m = static_cast<int>(std::lround(shift)) % p.d;
            if (m < 0) m += p.d;
            const std::size_t idx =
                static_cast<std::size_t>(m) * 2 + (dir > 0 ? 0 : 1);
            pop[idx] += std::norm(f.a[static_cast<std::size_t>(jx) * f.ly + jy]);
        }
    }
    std::vector<ChannelPopulation> out;
    for (int m = 0; m < p.d; ++m) {
        out.push_back({m, +1, pop[static_cast<std::size_t>(m) * 2]});
        out.push_back({m, -1, pop[static_cast<std::size_t>(m) * 2 + 1]});
    }
    return out;
}

namespace detail {

// Matrix-free Hamiltonian application on [photon field | atom amplitudes].
class PacketHamiltonian {
public:
    PacketHamiltonian(const WavePacketSpec& spec, const ModelParams& p)
        : lx_(spec.lx), ly_(spec.ly), p_(p) {
        natoms_per_layer_ = ly_ / p.d;
        for (const auto& layer : p.layers) {
            int col = layer.x % lx_;
            if (col < 0) col += lx_;
            cols_.push_back(col);
        }
        field_size_ = static_cast<std::size_t>(lx_) * ly_;
        size_ = field_size_ +
                static_cast<std::size_t>(p.layers.size()) * natoms_per_layer_;
    }

    std::size_t size() const { return size_; }
    std::size_t field_size() const { return field_size_; }
    int atoms_per_layer() const { return natoms_per_layer_; }

    // Gershgorin bounds on the spectrum.
    void bounds(double& emin, double& emax) const {
        double om = 0.0;
        for (const auto& l : p_.layers) om = std::max(om, std::abs(l.omega));
        const double wa = p_.omega_a();
        emin = std::min(-4.0 * p_.xi - om, wa - om) - 0.01 * p_.xi - 1e-9;
        emax = std::max(4.0 * p_.xi + om, wa + om) + 0.01 * p_.xi + 1e-9;
    }

    void apply(const std::vector<Complex>& in, std::vector<Complex>& out) const {
        const int lx = lx_, ly = ly_;
        const double xi = p_.xi;
#ifdef _OPENMP
#pragma omp parallel for
#endif
        for (int x = 0; x < lx; ++x) {
            const std::size_t row = static_cast<std::size_t>(x) * ly;
            const std::size_t rm =
                static_cast<std::size_t>(x == 0 ? lx - 1 : x - 1) * ly;
            const std::size_t rp =
                static_cast<std::size_t>(x == lx - 1 ? 0 : x + 1) * ly;
            for (int y = 0; y < ly; ++y) {
                const int ym = y == 0 ? ly - 1 : y - 1;
                const int yp = y == ly - 1 ? 0 : y + 1;
                out[row + y] = -xi * (in[rm + y] + in[rp + y] + in[row + ym] +
                                      in[row + yp]);
            }
        }
        const double wa = p_.omega_a();
        std::size_t aoff = field_size_;
        for (std::size_t s = 0; s < cols_.size(); ++s) {
            const Complex om = p_.layers[s].omega;
            const std::size_t row = static_cast<std::size_t>(cols_[s]) * ly_;
            for (int j = 0; j < natoms_per_layer_; ++j) {
                const std::size_t site = row + static_cast<std::size_t>(j) * p_.d;
                out[aoff + j] = wa * in[aoff + j] + om * in[site];
                out[site] += std::conj(om) * in[aoff + j];
            }
            aoff += natoms_per_layer_;
        }
    }

private:
    int lx_, ly_;
    ModelParams p_;
    int natoms_per_layer_ = 0;
    std::vector<int> cols_;
    std::size_t field_size_ = 0;
    std::size_t size_ = 0;
};

inline double norm2(const std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& c : v) s += std::norm(c);
    return s;
}

// One Chebyshev step exp(-i H t) with coefficients i^{-n} J_n(a t) on the
// spectrum rescaled to [-1, 1]; truncated where the Bessel tail drops below
// 1e-17.
inline void chebyshev_step(const PacketHamiltonian& h, std::vector<Complex>& state,
                           double t, double a, double c) {
    const double at = a * t;
    const int nmax = static_cast<int>(at + 14.0 * std::cbrt(at + 1.0) + 30.0);
    const std::vector<double> jn = bessel_j_array(at, nmax);
    const std::size_t n = state.size();
    std::vector<Complex> phi0 = state;
    std::vector<Complex> phi1(n), acc(n), tmp(n);
    auto apply_scaled = [&](const std::vector<Complex>& in,
                            std::vector<Complex>& out) {
        h.apply(in, out);
        const double inv_a = 1.0 / a;
        for (std::size_t i = 0; i < n; ++i)
            out[i] = (out[i] - c * in[i]) * inv_a;
    };
    apply_scaled(phi0, phi1);
    const Complex ph[4] = {{1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}};
    for (std::size_t i = 0; i < n; ++i)
        acc[i] = jn[0] * phi0[i] + 2.0 * jn[1] * ph[1] * phi1[i];
    for (int k = 2; k <= nmax; ++k) {
        apply_scaled(phi1, tmp);
        for (std::size_t i = 0; i < n; ++i) {
            const Complex next = 2.0 * tmp[i] - phi0[i];
            phi0[i] = phi1[i];
            phi1[i] = next;
        }
        const double jk = jn[k];
        if (std::abs(jk) > 1e-17) {
            const Complex coef = 2.0 * jk * ph[k % 4];
            for (std::size_t i = 0; i < n; ++i) acc[i] += coef * phi1[i];
        } else if (k > at) {
            break;
        }
    }
    const Complex global = std::polar(1.0, -c * t);
    for (std::size_t i = 0; i < n; ++i) state[i] = global * acc[i];
}

}  // namespace detail

// Full time-domain run: build the packet, evolve in chunks with wrap-around
// guards, decompose the final field. Throws on wrap-around (invalid run).
inline OracleReport evolve_wavepacket(const WavePacketSpec& spec,
                                      const ModelParams& p) {
    p.validate();
    if (!detail::is_pow2(spec.lx))
        throw std::invalid_argument("evolve_wavepacket: lx must be a power of 2");
    if (spec.ly % p.d != 0)
        throw std::invalid_argument("evolve_wavepacket: ly must be a multiple of d");
    const double ky_cells = spec.k0.ky * spec.ly / (2.0 * kPi);
    if (std::abs(ky_cells - std::lround(ky_cells)) > 1e-9)
        throw std::invalid_argument(
            "evolve_wavepacket: k0.ky must sit on the ly momentum grid");
    if (!(spec.k0.kx > 0.0 && spec.k0.kx < kPi))
        throw std::invalid_argument("evolve_wavepacket: k0.kx must lie in (0, pi)");

    // Gaussian packet assembled in momentum space.
    PacketField f{spec.lx, spec.ly, {}};
    f.a.assign(static_cast<std::size_t>(spec.lx) * spec.ly, Complex{});
    for (int jx = 0; jx < spec.lx; ++jx) {
        const double kx = reduce_to_bz(2.0 * kPi * jx / spec.lx);
        const double dx = reduce_to_bz(kx - spec.k0.kx);
        const double gx = std::exp(-dx * dx / (4.0 * spec.sigma_x * spec.sigma_x));
        for (int jy = 0; jy < spec.ly; ++jy) {
            const double ky = reduce_to_bz(2.0 * kPi * jy / spec.ly);
            const double dy = reduce_to_bz(ky - spec.k0.ky);
            const double gy =
                std::exp(-dy * dy / (4.0 * spec.sigma_y * spec.sigma_y));
            f.a[static_cast<std::size_t>(jx) * spec.ly + jy] =
                gx * gy * std::polar(1.0, -(kx * spec.x0 + ky * spec.y0));
        }
    }
    detail::transform2d(f, +1);

    detail::PacketHamiltonian h(spec, p);
    std::vector<Complex> state(h.size(), Complex{});
    std::copy(f.a.begin(), f.a.end(), state.begin());
    const double n0 = std::sqrt(detail::norm2(state));
    for (Complex& c : state) c /= n0;

    auto guard_occupancy = [&]() {
        double s = 0.0;
        for (int x = 0; x < spec.lx; ++x) {
            if (x >= spec.guard && x < spec.lx - spec.guard) continue;
            const std::size_t row = static_cast<std::size_t>(x) * spec.ly;
            for (int y = 0; y < spec.ly; ++y) s += std::norm(state[row + y]);
        }
        return s;
    };

    OracleReport rep;
    rep.guard_max = guard_occupancy();
    if (rep.guard_max > spec.guard_tol)
        throw std::runtime_error(
            "evolve_wavepacket: initial packet does not fit inside the guards");

    double emin = 0.0, emax = 0.0;
    h.bounds(emin, emax);
    const double a = 0.5 * (emax - emin);
    const double c = 0.5 * (emax + emin);
    const double vx = 2.0 * p.xi * std::sin(spec.k0.kx);
    const double t_total = spec.travel_fraction * spec.lx / vx;
    for (int chunk = 0; chunk < spec.chunks; ++chunk) {
        detail::chebyshev_step(h, state, t_total / spec.chunks, a, c);
        rep.guard_max = std::max(rep.guard_max, guard_occupancy());
        if (rep.guard_max > spec.guard_tol)
            throw std::runtime_error(
                "evolve_wavepacket: wrap-around detected at the lattice edge");
    }
    rep.norm_drift = std::abs(std::sqrt(detail::norm2(state)) - 1.0);

    std::copy(state.begin(), state.begin() + h.field_size(), f.a.begin());
    rep.populations = channel_populations(f, spec.k0, p);
    for (std::size_t i = h.field_size(); i < h.size(); ++i)
        rep.atomic_residue += std::norm(state[i]);
    for (const auto& cp : rep.populations)
        if (cp.m == 0 && cp.direction > 0) rep.transmission_forward = cp.probability;
    rep.inconclusive = rep.atomic_residue > 1e-3;
    return rep;
}

}  // namespace ccas
