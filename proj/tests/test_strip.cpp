#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ccas/scatter2.hpp"
#include "ccas/strip.hpp"

using namespace ccas;
using Catch::Approx;

namespace {
constexpr double kFourPi2 = 4.0 * kPi * kPi;
const Momentum2 kRef{kPi / 8, kPi / 4};
// all five branches open at this incident momentum for d = 3
const Momentum2 kMulti{std::acos(-0.8), kPi / 4};
}  // namespace

TEST_CASE("free propagation") {
    const ModelParams p{1.0, 0.0, 3, {{0, {0.0, 0.0}}}};
    const auto sol = solve_strip_exact(kMulti, p);
    const auto f = flux_probabilities(sol, kMulti, p);
    CHECK(std::abs(sol.transmission[0] - 1.0) < 1e-13);
    for (int m = 0; m < 3; ++m) CHECK(std::abs(sol.reflection[m]) < 1e-13);
    CHECK(f.scattered_total < 1e-26);
    CHECK(f.unitarity_sum == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unitarity of the matching solution") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> u(0.1, kPi - 0.1);
    std::uniform_real_distribution<double> ud(-15.0, 15.0);
    for (int i = 0; i < 40; ++i) {
        const int d = std::uniform_int_distribution<int>(1, 4)(rng);
        const int nlayers = std::uniform_int_distribution<int>(1, 2)(rng);
        ModelParams p{1.0, ud(rng), d, {{0, {5.0, 0.0}}}};
        if (nlayers == 2)
            p.layers.push_back(
                {std::uniform_int_distribution<int>(0, 12)(rng), {7.0, 0.0}});
        const Momentum2 k{u(rng), u(rng)};
        bool edge = false;
        for (int m = 0; m < d; ++m)
            if (make_channel(k, m, d).status == ChannelStatus::band_edge)
                edge = true;
        if (edge) continue;
        const auto sol = solve_strip_exact(k, p);
        const auto f = flux_probabilities(sol, k, p);
        CHECK(f.unitarity_sum == Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("one-layer reflection peaks at the resonance detuning") {
    ModelParams p{1.0, 0.0, 1, {{0, {5.0, 0.0}}}};
    const double d0 = resonance_detuning(kRef, p);
    double best = 0.0, best_r = -1.0;
    for (double delta = d0 - 5.0; delta <= d0 + 5.0; delta += 0.01) {
        p.delta = delta;
        const auto sol = solve_strip_exact(kRef, p);
        const double r2 = std::norm(sol.reflection[0]);
        if (r2 > best_r) {
            best_r = r2;
            best = delta;
        }
    }
    CHECK(std::abs(best - d0) <= 0.01 + 1e-12);
    // at resonance the single branch reflects perfectly
    p.delta = d0;
    CHECK(std::norm(solve_strip_exact(kRef, p).reflection[0]) ==
          Approx(1.0).epsilon(1e-12));
}

TEST_CASE("flux probabilities equal 4 pi^2 times the closed-form weights") {
    SECTION("one layer, all branches open") {
        ModelParams p{1.0, 0.0, 3, {{0, {5.0, 0.0}}}};
        p.delta = resonance_detuning(kMulti, p);
        const auto r = r_one(kMulti, p);
        const auto sol = solve_strip_exact(kMulti, p);
        const auto f = flux_probabilities(sol, kMulti, p);
        for (const auto& [c, pl] : r.channels) {
            if (!c.open()) continue;
            const double strip = c.l >= 0 ? f.forward_scattered[std::abs(c.l)]
                                          : f.backward[std::abs(c.l)];
            CHECK(std::abs(pl - strip / kFourPi2) <= 1e-10 * pl);
        }
    }
    SECTION("two layers, direction-resolved") {
        ModelParams p{1.0, -1.5, 3, {{0, {7.0, 0.0}}, {7, {5.0, 0.0}}}};
        const auto r = r_two(kMulti, p, RTwoMode::directional);
        const auto sol = solve_strip_exact(kMulti, p);
        const auto f = flux_probabilities(sol, kMulti, p);
        for (const auto& [c, pl] : r.channels) {
            if (!c.open()) continue;
            const double strip = c.l >= 0 ? f.forward_scattered[std::abs(c.l)]
                                          : f.backward[std::abs(c.l)];
            CHECK(std::abs(pl - strip / kFourPi2) <= 1e-8 * std::max(pl, 1e-12));
        }
    }
}

TEST_CASE("channel ratios match the closed-form weighting") {
    ModelParams p{1.0, 0.0, 3, {{0, {5.0, 0.0}}}};
    p.delta = resonance_detuning(kMulti, p) - 2.0;
    const auto r = r_one(kMulti, p);
    const auto sol = solve_strip_exact(kMulti, p);
    const auto f = flux_probabilities(sol, kMulti, p);
    std::vector<double> pfwd(3, 0.0);
    for (const auto& [c, pl] : r.channels)
        if (c.l >= 0) pfwd[c.l] = pl;
    for (int m = 1; m < 3; ++m) {
        const double ra = pfwd[m] / pfwd[0];
        const double rs = f.forward_scattered[m] / f.forward_scattered[0];
        CHECK(std::abs(ra - rs) <= 1e-8 * ra);
        // one column scatters symmetrically
        CHECK(f.backward[m] == Approx(f.forward_scattered[m]).epsilon(1e-10));
    }
}

TEST_CASE("reflection dies at the zero-scattering point") {
    ModelParams p{1.0, 0.0, 3, {{0, {5.0, 0.0}}}};
    const double root =
        1.0 - std::cos(kPi / 4) + std::cos(fold_momentum(kPi / 4, 2, 3));
    double prev = 1e300;
    double last = 0.0;
    for (double off : {0.2, 0.05, 0.01, 1e-3, 1e-5}) {
        const Momentum2 k{std::acos(root + off), kPi / 4};
        const auto f =
            flux_probabilities(solve_strip_exact(k, p), k, p);
        CHECK(f.scattered_total < prev);
        prev = f.scattered_total;
        last = f.scattered_total;
    }
    CHECK(last < 1e-3);
}

TEST_CASE("atom amplitudes agree with the spin-wave amplitudes") {
    // strip atom amplitude b_s = (2 pi / sqrt(d)) beta_s e^{i kx x_s}
    ModelParams p{1.0, -1.5, 3, {{0, {7.0, 0.0}}, {7, {5.0, 0.0}}}};
    const auto sol = solve_strip_exact(kMulti, p);
    const auto amps = beta_two(kMulti, p);
    const Complex betas[2] = {amps.beta1, amps.beta2};
    for (int s = 0; s < 2; ++s) {
        const Complex expect = 2.0 * kPi / std::sqrt(3.0) * betas[s] *
                               std::polar(1.0, kMulti.kx * p.layers[s].x);
        CHECK(std::abs(sol.atom_amps[s] - expect) <=
              1e-10 * std::abs(expect));
    }
}

TEST_CASE("degenerate and edge handling") {
    SECTION("two layers in the same column, second coupling off") {
        ModelParams p2{1.0, 0.5, 2, {{3, {5.0, 0.0}}, {3, {0.0, 0.0}}}};
        ModelParams p1{1.0, 0.5, 2, {{3, {5.0, 0.0}}}};
        const auto s2 = solve_strip_exact(kRef, p2);
        const auto s1 = solve_strip_exact(kRef, p1);
        for (int m = 0; m < 2; ++m) {
            CHECK(std::abs(s2.reflection[m] - s1.reflection[m]) < 1e-12);
            CHECK(std::abs(s2.transmission[m] - s1.transmission[m]) < 1e-12);
        }
    }
    SECTION("band-edge channel is rejected") {
        ModelParams p{1.0, 0.0, 3, {{0, {5.0, 0.0}}}};
        const double root =
            1.0 - std::cos(kPi / 4) + std::cos(fold_momentum(kPi / 4, 1, 3));
        CHECK_THROWS_AS(solve_strip_exact({std::acos(root), kPi / 4}, p),
                        std::domain_error);
    }
    SECTION("incident momentum must move rightward") {
        ModelParams p{1.0, 0.0, 1, {{0, {5.0, 0.0}}}};
        CHECK_THROWS_AS(solve_strip_exact({-kPi / 8, kPi / 4}, p),
                        std::domain_error);
    }
}
