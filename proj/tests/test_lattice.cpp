#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ccas/lattice.hpp"

using namespace ccas;
using Catch::Approx;

TEST_CASE("brillouin zone reduction lands in (-pi, pi]") {
    CHECK(reduce_to_bz(kPi) == Approx(kPi));
    CHECK(reduce_to_bz(-kPi) == Approx(kPi));
    CHECK(reduce_to_bz(3.0 * kPi / 2.0) == Approx(-kPi / 2.0));
    CHECK(reduce_to_bz(2.0 * kPi) == Approx(0.0).margin(1e-15));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int i = 0; i < 200; ++i) {
        const double k = u(rng);
        const double r = reduce_to_bz(k);
        CHECK(r > -kPi);
        CHECK(r <= kPi);
        CHECK(std::abs(std::remainder(r - k, 2.0 * kPi)) < 1e-12);
    }
}

TEST_CASE("dispersion of the square lattice") {
    ModelParams p{1.0, 0.0, 1, {{0, {5.0, 0.0}}}};
    CHECK(dispersion({0.0, 0.0}, p) == Approx(-4.0));
    CHECK(dispersion({kPi / 2, kPi / 2}, p) == Approx(0.0).margin(1e-15));
    CHECK(dispersion({kPi / 8, kPi / 4}, p) ==
          Approx(-2.0 * (std::cos(kPi / 8) + std::cos(kPi / 4))));

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 100; ++i) {
        const Momentum2 k{u(rng), u(rng)};
        CHECK(dispersion(k, p) == Approx(dispersion({-k.kx, k.ky}, p)));
        CHECK(dispersion(k, p) == Approx(dispersion({k.ky, k.kx}, p)));
    }
}

TEST_CASE("momentum folding") {
    CHECK(fold_momentum(kPi / 4, 1, 3) == Approx(11.0 * kPi / 12.0));
    CHECK(fold_momentum(kPi / 4, 2, 3) == Approx(-5.0 * kPi / 12.0));
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    std::uniform_int_distribution<int> du(1, 6);
    for (int i = 0; i < 200; ++i) {
        const int d = du(rng);
        const int l = std::uniform_int_distribution<int>(-d + 1, d - 1)(rng);
        double ky = u(rng);
        if (ky <= -kPi) ky = kPi;
        // identity branch
        CHECK(fold_momentum(ky, 0, d) == Approx(ky));
        const double f = fold_momentum(ky, l, d);
        CHECK(f > -kPi);
        CHECK(f <= kPi);
        // closure: refolding with l = 0 is the identity
        CHECK(fold_momentum(f, 0, d) == Approx(f));
        // periodic in l with period d
        CHECK(fold_momentum(ky, l + d * ((l >= 0) ? 1 : -1), d) == Approx(f));
    }
}

TEST_CASE("open channel enumeration") {
    ModelParams p1{1.0, 0.0, 1, {{0, {5.0, 0.0}}}};
    const Momentum2 k0{kPi / 8, kPi / 4};

    SECTION("d = 1 has a single forward branch") {
        const auto ch = open_channels(k0, p1);
        REQUIRE(ch.size() == 1);
        CHECK(ch[0].l == 0);
        CHECK(ch[0].ky_out == Approx(kPi / 4));
        CHECK(ch[0].klx == Approx(kPi / 8));
        CHECK(ch[0].status == ChannelStatus::open);
    }

    SECTION("d = 3 at (pi/8, pi/4): side branches are evanescent") {
        ModelParams p3 = p1;
        p3.d = 3;
        const auto ch = open_channels(k0, p3);
        REQUIRE(ch.size() == 5);
        const double a1 = std::cos(kPi / 8) + std::cos(kPi / 4) -
                          std::cos(11.0 * kPi / 12.0);
        for (const Channel& c : ch) {
            if (c.l == 0) {
                CHECK(c.status == ChannelStatus::open);
            } else {
                CHECK(c.status == ChannelStatus::evanescent);
            }
            if (std::abs(c.l) == 1) {
                CHECK(c.a == Approx(a1));
                CHECK(c.a > 1.0);
            }
        }
    }

    SECTION("band-edge status at an exact |A| = 1 root") {
        ModelParams p3 = p1;
        p3.d = 3;
        const double ckx =
            1.0 - std::cos(kPi / 4) + std::cos(11.0 * kPi / 12.0);
        const auto ch = open_channels({std::acos(ckx), kPi / 4}, p3);
        bool saw_edge = false;
        for (const Channel& c : ch)
            if (std::abs(c.l) == 1) {
                CHECK(c.status == ChannelStatus::band_edge);
                saw_edge = true;
            }
        CHECK(saw_edge);
    }

    SECTION("count, symmetry, and energy conservation at random momenta") {
        std::mt19937 rng(17);
        std::uniform_real_distribution<double> u(0.05, kPi - 0.05);
        for (int i = 0; i < 100; ++i) {
            ModelParams p = p1;
            p.d = std::uniform_int_distribution<int>(1, 5)(rng);
            const Momentum2 k{u(rng), u(rng)};
            const auto ch = open_channels(k, p);
            REQUIRE(static_cast<int>(ch.size()) == 2 * p.d - 1);
            const double e0 = dispersion(k, p);
            for (const Channel& c : ch) {
                const Channel& mirror = ch[ch.size() - 1 - (c.l + p.d - 1)];
                CHECK(mirror.l == -c.l);
                CHECK(mirror.status == c.status);
                if (c.open())
                    CHECK(std::abs(dispersion({c.klx, c.ky_out}, p) - e0) <=
                          1e-12 * p.xi);
            }
        }
    }
}
