#pragma once

#include <array>
#include <span>
#include <vector>

#include "ccas/lattice.hpp"
#include "ccas/quadrature.hpp"

namespace ccas {

// Complex value carrying a band-edge divergence marker. Divergences are
// values, not exceptions, so momentum sweeps can record them and move on.
struct GreenValue {
    Complex value{0.0, 0.0};
    bool divergent = false;
};

// Closed form of the branch-l self-energy contribution:
//   -i |O|^2 / (2 d xi sqrt(1 - A^2))        propagating, |A| < 1
//   -sign(A) |O|^2 / (2 d xi sqrt(A^2 - 1))  evanescent,  |A| > 1
// with A = cos kx + cos ky - cos p_l(ky). |A| = 1 diverges.
inline GreenValue sigma_l_analytic(const Momentum2& k, int l,
                                   const ModelParams& p,
                                   const LayerSpec& layer) {
    const double w2 = std::norm(layer.omega);
    if (w2 == 0.0) return {};
    const double a = channel_a(k, l, p.d);
    if (std::abs(std::abs(a) - 1.0) <= kBandEdgeTol) return {Complex{}, true};
    const double pref = w2 / (2.0 * p.d * p.xi);
    if (std::abs(a) < 1.0)
        return {Complex(0.0, -pref / std::sqrt(1.0 - a * a)), false};
    const double sgn = a > 0.0 ? 1.0 : -1.0;
    return {Complex(-sgn * pref / std::sqrt(a * a - 1.0), 0.0), false};
}

// Self-energy of the spin-wave state coupled at one layer: sum of the d
// folded-branch contributions. Im(value) <= 0 on non-divergent points.
struct SelfEnergy {
    Complex value{0.0, 0.0};
    bool divergent = false;
    std::vector<Complex> contributions;  // l = 0..d-1; divergent terms as 0
};

inline SelfEnergy sigma_total(const Momentum2& k, const ModelParams& p,
                              const LayerSpec& layer) {
    SelfEnergy s;
    s.contributions.resize(p.d);
    for (int l = 0; l < p.d; ++l) {
        const GreenValue t = sigma_l_analytic(k, l, p, layer);
        s.contributions[l] = t.value;
        s.divergent = s.divergent || t.divergent;
        s.value += t.value;
    }
    return s;
}

namespace detail {

// E - eps(q) on a folded branch equals 2 xi (cos q - A). Near the poles the
// plain difference loses ~half the digits to cancellation, which caps the
// quadrature accuracy; for |A| <= 1 the product form
// cos q - cos q0 = -2 sin((q+q0)/2) sin((q-q0)/2) evaluates to full relative
// precision instead.
struct BranchDenominator {
    double a = 0.0;
    double q0 = 0.0;  // acos(a) when |a| <= 1
    bool pole = false;

    explicit BranchDenominator(double a_in) : a(a_in) {
        if (std::abs(a) <= 1.0) {
            pole = true;
            q0 = std::acos(a);
        }
    }

    double operator()(double q) const {
        if (!pole) return std::cos(q) - a;
        return -2.0 * std::sin(0.5 * (q + q0)) * std::sin(0.5 * (q - q0));
    }
};

}  // namespace detail

// Branch-l self-energy by direct quadrature with the retarded pole broadened
// to +i eta. Independent numerical route used to validate the closed form.
inline Complex sigma_l_quadrature(const Momentum2& k, int l,
                                  const ModelParams& p, const LayerSpec& layer,
                                  double eta, double abs_tol = 1e-10) {
    if (!(eta > 0.0))
        throw std::invalid_argument("sigma_l_quadrature: eta must be > 0");
    const double w2 = std::norm(layer.omega);
    if (w2 == 0.0) return {};
    const double pref = w2 / (2.0 * kPi * p.d);
    const detail::BranchDenominator den(channel_a(k, l, p.d));
    auto integrand = [&](double q) {
        return pref / Complex(2.0 * p.xi * den(q), eta);
    };
    std::array<double, 2> brk{};
    std::span<const double> brk_view{};
    if (den.pole) {
        brk = {-den.q0, den.q0};
        brk_view = brk;
    }
    return integrate_gk(integrand, -kPi, kPi, abs_tol, brk_view).value;
}

// eta values used when extrapolating broadened integrals to the retarded
// limit; three nodes give a quadratic fit in eta. The values are relative to
// xi and additionally scaled by |A^2 - 1| so the expansion parameter of the
// broadened kernel (eta / distance to the branch edge) stays uniformly small
// across momenta, including near-divergent ones.
inline constexpr std::array<double, 3> kDefaultEtas{1e-3, 1e-4, 1e-5};

inline double eta_edge_scale(double a) {
    return std::clamp(std::abs(a * a - 1.0), 1e-6, 1.0);
}

inline Complex sigma_l_quadrature_extrapolated(
    const Momentum2& k, int l, const ModelParams& p, const LayerSpec& layer,
    std::span<const double> etas_rel = kDefaultEtas) {
    const double scale = p.xi * eta_edge_scale(channel_a(k, l, p.d));
    std::vector<double> nodes(etas_rel.begin(), etas_rel.end());
    std::vector<Complex> vals;
    vals.reserve(nodes.size());
    for (double& eta : nodes) {
        eta *= scale;
        vals.push_back(sigma_l_quadrature(k, l, p, layer, eta));
    }
    return extrapolate_to_zero(nodes, vals);
}

// Single-branch 1D density of states, rho = |dk/dE| = 1 / (2 xi sin k) on the
// band E = -2 xi (cos k + cos ky_out). Band edges are flagged; rho is then
// reported as 0 so no infinity leaks into arithmetic.
struct DosPoint {
    double energy = 0.0;
    double rho = 0.0;
    bool band_edge = false;
};

inline DosPoint dos_1d(double energy, double ky_out, const ModelParams& p) {
    const double lo = -2.0 * p.xi * (1.0 + std::cos(ky_out));
    const double hi = 2.0 * p.xi * (1.0 - std::cos(ky_out));
    if (energy < lo || energy > hi)
        throw std::domain_error("dos_1d: energy outside the branch band");
    const double c = -energy / (2.0 * p.xi) - std::cos(ky_out);
    DosPoint out;
    out.energy = energy;
    if (std::abs(std::abs(c) - 1.0) <= kBandEdgeTol) {
        out.band_edge = true;
        return out;
    }
    const double klx = std::acos(std::clamp(c, -1.0, 1.0));
    out.rho = 1.0 / (2.0 * p.xi * std::sin(klx));
    return out;
}

// Retarded lattice Green's function of one folded 1D branch with a phase
// factor across dx columns:
//   G(E, ky, dx) = (1/2pi) Int dq e^{i q dx} / (E - eps(q, ky) + i0+)
// Residue evaluation: the unit-circle pole z = e^{i kappa} (propagating) or
// the interior real root z = sign(A) e^{-mu} (evanescent) gives
//   -i e^{i kappa |dx|} / (2 xi sin kappa)
//   -sign(A) sign(A)^{|dx|} e^{-mu |dx|} / (2 xi sinh mu).
// dx = 0 reduces to the self-energy kernel times d / |O|^2.
inline GreenValue lattice_green_phase(double energy, double ky_out, int dx,
                                      const ModelParams& p) {
    const double a = -energy / (2.0 * p.xi) - std::cos(ky_out);
    const int n = std::abs(dx);
    if (std::abs(std::abs(a) - 1.0) <= kBandEdgeTol) return {Complex{}, true};
    if (std::abs(a) < 1.0) {
        const double kappa = std::acos(a);
        const Complex phase = std::polar(1.0, kappa * n);
        return {Complex(0.0, -1.0) * phase / (2.0 * p.xi * std::sin(kappa)),
                false};
    }
    const double sgn = a > 0.0 ? 1.0 : -1.0;
    const double mu = std::acosh(std::abs(a));
    const double alt = (sgn < 0.0 && n % 2 == 1) ? -1.0 : 1.0;
    return {Complex(-sgn * alt * std::exp(-mu * n) /
                        (2.0 * p.xi * std::sinh(mu)),
                    0.0),
            false};
}

// Same object by direct quadrature with broadening; ground truth for the
// closed form above.
inline Complex green_phase_quadrature(double energy, double ky_out, int dx,
                                      const ModelParams& p, double eta,
                                      double abs_tol = 1e-10) {
    if (!(eta > 0.0))
        throw std::invalid_argument("green_phase_quadrature: eta must be > 0");
    const detail::BranchDenominator den(-energy / (2.0 * p.xi) -
                                        std::cos(ky_out));
    auto integrand = [&](double q) {
        return std::polar(1.0, q * dx) /
               Complex(2.0 * p.xi * den(q), eta) / (2.0 * kPi);
    };
    std::array<double, 2> brk{};
    std::span<const double> brk_view{};
    if (den.pole) {
        brk = {-den.q0, den.q0};
        brk_view = brk;
    }
    return integrate_gk(integrand, -kPi, kPi, abs_tol, brk_view).value;
}

inline Complex green_phase_quadrature_extrapolated(
    double energy, double ky_out, int dx, const ModelParams& p,
    std::span<const double> etas_rel = kDefaultEtas) {
    const double a = -energy / (2.0 * p.xi) - std::cos(ky_out);
    const double scale = p.xi * eta_edge_scale(a);
    std::vector<double> nodes(etas_rel.begin(), etas_rel.end());
    std::vector<Complex> vals;
    vals.reserve(nodes.size());
    for (double& eta : nodes) {
        eta *= scale;
        vals.push_back(green_phase_quadrature(energy, ky_out, dx, p, eta));
    }
    return extrapolate_to_zero(nodes, vals);
}

// Branch indices l in 0..d-1 whose |A_l| sits within band-edge tolerance of 1.
// Purely kinematic; at these momenta the self-energy diverges and the photon
// passes unscattered.
inline std::vector<int> detect_divergence(const Momentum2& k,
                                          const ModelParams& p) {
    std::vector<int> out;
    for (int l = 0; l < p.d; ++l)
        if (std::abs(std::abs(channel_a(k, l, p.d)) - 1.0) <= kBandEdgeTol)
            out.push_back(l);
    return out;
}

}  // namespace ccas
