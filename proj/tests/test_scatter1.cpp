#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ccas/scatter1.hpp"

using namespace ccas;
using Catch::Approx;

namespace {
ModelParams one_layer(double omega, double xi = 1.0, int d = 1,
                      double delta = 0.0) {
    return ModelParams{xi, delta, d, {{0, {omega, 0.0}}}};
}
const Momentum2 kRef{kPi / 8, kPi / 4};

double divergence_root_coskx(int l) {
    return 1.0 - std::cos(kPi / 4) + std::cos(fold_momentum(kPi / 4, l, 3));
}
}  // namespace

TEST_CASE("spin-wave amplitude") {
    SECTION("zero coupling") {
        CHECK(beta_coeff(kRef, one_layer(0.0)) == Complex{});
    }
    SECTION("resonance value and maximality") {
        ModelParams p = one_layer(5.0);
        const double d0 = resonance_detuning(kRef, p);
        p.delta = d0;
        const SelfEnergy s = sigma_total(kRef, p, p.layers[0]);
        const Complex expect =
            Complex(5.0, 0.0) / (2.0 * kPi) / Complex(0.0, -s.value.imag());
        CHECK(std::abs(beta_coeff(kRef, p) - expect) < 1e-14);
        const double peak = std::abs(beta_coeff(kRef, p));
        for (double shift : {-7.0, -1.0, 0.5, 2.0, 11.0}) {
            ModelParams q = p;
            q.delta = d0 + shift;
            CHECK(std::abs(beta_coeff(kRef, q)) < peak);
        }
    }
    SECTION("divergent self-energy shuts the amplitude off") {
        ModelParams p = one_layer(5.0, 1.0, 3);
        const Momentum2 k{std::acos(divergence_root_coskx(1)), kPi / 4};
        CHECK(beta_coeff(k, p) == Complex{});
    }
}

TEST_CASE("one-layer T-matrix coefficient") {
    SECTION("resonance magnitude, parameters cancel") {
        // |u| = xi sin(kx) / pi at resonance for d = 1
        struct Tuple { double kx, ky, omega, xi; };
        for (const Tuple& t : {Tuple{kPi / 8, kPi / 4, 5.0, 1.0},
                               Tuple{0.7, -1.2, 3.7, 2.3},
                               Tuple{2.0, 0.3, 11.0, 0.5}}) {
            ModelParams p = one_layer(t.omega, t.xi);
            const Momentum2 k{t.kx, t.ky};
            p.delta = resonance_detuning(k, p);
            CHECK(std::abs(u_one(k, p)) ==
                  Approx(t.xi * std::sin(t.kx) / kPi).epsilon(1e-12));
        }
    }
    SECTION("large detuning suppression") {
        ModelParams p = one_layer(5.0);
        p.delta = 1e7;
        CHECK(std::abs(u_one(kRef, p)) < 1e-6);
    }
}

TEST_CASE("per-channel probability") {
    SECTION("universal forward peak at d = 1") {
        ModelParams p = one_layer(5.0);
        p.delta = resonance_detuning(kRef, p);
        CHECK(p_channel(kRef, 0, p) ==
              Approx(1.0 / (4.0 * kPi * kPi)).epsilon(1e-12));
    }
    SECTION("closed branches are rejected") {
        ModelParams p = one_layer(5.0, 1.0, 3);
        CHECK_THROWS_AS(p_channel(kRef, 1, p), std::invalid_argument);
        const Momentum2 edge{std::acos(divergence_root_coskx(1)), kPi / 4};
        CHECK_THROWS_AS(p_channel(edge, 1, p), std::domain_error);
    }
    SECTION("band-edge incident momentum is rejected") {
        ModelParams p = one_layer(5.0);
        CHECK_THROWS_AS(p_channel({0.0, kPi / 4}, 0, p), std::domain_error);
        CHECK_THROWS_AS(r_one({kPi, kPi / 4}, p), std::domain_error);
    }
}

TEST_CASE("total scattering record") {
    SECTION("exact Lorentzian lineshape in the detuning") {
        for (int d : {1, 2, 3}) {
            ModelParams p = one_layer(5.0, 1.0, d);
            const double d0 = resonance_detuning(kRef, p);
            const double g = -sigma_total(kRef, p, p.layers[0]).value.imag();
            double c_ref = 0.0;
            for (int i = 0; i < 60; ++i) {
                ModelParams q = p;
                q.delta = d0 - 30.0 + i;
                const double r = r_one(kRef, q).total;
                const double c =
                    r * ((q.delta - d0) * (q.delta - d0) + g * g);
                if (i == 0) c_ref = c;
                CHECK(c == Approx(c_ref).epsilon(1e-10));
            }
        }
    }
    SECTION("channel symmetry P_l = P_{-l} on random open configurations") {
        std::mt19937 rng(37);
        std::uniform_real_distribution<double> u(0.05, kPi - 0.05);
        int checked = 0;
        while (checked < 50) {
            const int d = std::uniform_int_distribution<int>(1, 4)(rng);
            ModelParams p = one_layer(5.0, 1.0, d);
            p.delta = std::uniform_real_distribution<double>(-10, 10)(rng);
            const Momentum2 k{u(rng), u(rng)};
            if (!detect_divergence(k, p).empty()) continue;
            const ScatteringResult r = r_one(k, p);
            for (const auto& [c, pl] : r.channels) {
                const auto& [cm, plm] = r.channels[r.channels.size() - 1 -
                                                   (c.l + p.d - 1)];
                REQUIRE(cm.l == -c.l);
                CHECK(std::abs(pl - plm) <= 1e-12 * std::max(1.0, pl));
            }
            ++checked;
        }
    }
    SECTION("divergent points scatter nothing") {
        ModelParams p = one_layer(5.0, 1.0, 3);
        for (int l : {1, 2}) {
            const Momentum2 k{std::acos(divergence_root_coskx(l)), kPi / 4};
            const ScatteringResult r = r_one(k, p);
            CHECK(r.divergent);
            CHECK(r.total == 0.0);
            for (const auto& [c, pl] : r.channels) CHECK(pl == 0.0);
            // nearby momenta scatter
            for (double off : {-0.05, 0.05}) {
                const Momentum2 kk{
                    std::acos(divergence_root_coskx(l) + off), kPi / 4};
                CHECK(r_one(kk, p).total > 0.0);
            }
        }
    }
    SECTION("evanescent channels contribute zero") {
        ModelParams p = one_layer(5.0, 1.0, 3);
        const ScatteringResult r = r_one(kRef, p);
        double open_sum = 0.0;
        for (const auto& [c, pl] : r.channels) {
            if (!c.open()) CHECK(pl == 0.0);
            open_sum += pl;
        }
        CHECK(r.total == Approx(open_sum));
    }
}

TEST_CASE("resonance condition") {
    SECTION("d = 1: bare crossing, self-energy purely imaginary") {
        CHECK(resonance_detuning(kRef, one_layer(5.0)) ==
              Approx(2.0 * (std::cos(kPi / 8) + std::cos(kPi / 4))));
        CHECK(resonance_detuning(kRef, one_layer(0.0)) ==
              Approx(2.0 * (std::cos(kPi / 8) + std::cos(kPi / 4))));
    }
    SECTION("d = 3: evanescent branches shift the peak down") {
        const double bare = 2.0 * (std::cos(kPi / 8) + std::cos(kPi / 4));
        const double d0 = resonance_detuning(kRef, one_layer(5.0, 1.0, 3));
        CHECK(d0 < bare);
        // numeric argmax over a fine grid agrees
        ModelParams p = one_layer(5.0, 1.0, 3);
        double best = 0.0, best_r = -1.0;
        for (double delta = d0 - 0.05; delta <= d0 + 0.05; delta += 1e-3) {
            p.delta = delta;
            const double r = r_one(kRef, p).total;
            if (r > best_r) {
                best_r = r;
                best = delta;
            }
        }
        CHECK(std::abs(best - d0) <= 1e-3);
    }
    SECTION("linewidth scales exactly with |Omega|^2") {
        ModelParams p5 = one_layer(5.0, 1.0, 3);
        ModelParams p10 = one_layer(10.0, 1.0, 3);
        const double g5 = -sigma_total(kRef, p5, p5.layers[0]).value.imag();
        const double g10 = -sigma_total(kRef, p10, p10.layers[0]).value.imag();
        CHECK(g10 == 4.0 * g5);
    }
    SECTION("divergent point raises") {
        ModelParams p = one_layer(5.0, 1.0, 3);
        const Momentum2 k{std::acos(divergence_root_coskx(2)), kPi / 4};
        CHECK_THROWS_AS(resonance_detuning(k, p), std::domain_error);
    }
}
