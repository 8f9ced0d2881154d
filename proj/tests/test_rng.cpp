#include <doctest.h>

#include <array>
#include <cmath>

#include "ctlcap/rng.hpp"

using namespace ctlcap;

TEST_SUITE("rng")
{
    TEST_CASE("philox4x32-10 known answers")
    {
        // Random123 reference vectors.
        auto const zero = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
        CHECK(zero == std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});

        auto const pi = Philox4x32::apply({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
        CHECK(pi == std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
    }

    TEST_CASE("streams are reproducible and distinct")
    {
        RngStream a(42, 7);
        RngStream b(42, 7);
        RngStream c(42, 8);
        RngStream d(43, 7);
        int same_c = 0;
        int same_d = 0;
        for (int i = 0; i < 1000; ++i) {
            auto const x = a.next_u32();
            CHECK(x == b.next_u32());
            same_c += x == c.next_u32();
            same_d += x == d.next_u32();
        }
        CHECK(same_c < 3);
        CHECK(same_d < 3);
    }

    TEST_CASE("uniform and normal moments")
    {
        RngStream rng(1, 0);
        constexpr int n = 200000;
        double su = 0;
        double sn = 0;
        double sn2 = 0;
        double lo = 1;
        double hi = 0;
        for (int i = 0; i < n; ++i) {
            double const u = rng.uniform();
            lo = std::min(lo, u);
            hi = std::max(hi, u);
            su += u;
            double const z = rng.normal();
            sn += z;
            sn2 += z * z;
        }
        CHECK(lo >= 0.0);
        CHECK(hi < 1.0);
        CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
        CHECK(std::abs(sn / n) < 0.01);
        CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    }

    TEST_CASE("uniform_open never returns zero")
    {
        RngStream rng(3, 3);
        for (int i = 0; i < 10000; ++i) {
            double const u = rng.uniform_open();
            REQUIRE(u > 0.0);
            REQUIRE(u < 1.0);
        }
    }
}
