#include <doctest.h>

#include <set>
#include <vector>

#include <omp.h>

#include "ctlcap/carryfree.hpp"
#include "ctlcap/error.hpp"

using namespace ctlcap;

namespace {

// Oracle: a series as the set of its nonzero levels.
using LevelSet = std::set<std::int64_t>;

LevelSet naive_add(LevelSet const& x, LevelSet const& y)
{
    LevelSet out = x;
    for (auto l : y) {
        if (!out.erase(l)) {
            out.insert(l);
        }
    }
    return out;
}

LevelSet naive_mul(LevelSet const& x, LevelSet const& y)
{
    LevelSet out;
    for (auto i : x) {
        for (auto j : y) {
            out = naive_add(out, {i + j});
        }
    }
    return out;
}

LevelSet as_set(BitSeries const& s)
{
    auto const v = s.levels();
    return {v.begin(), v.end()};
}

BitSeries random_series(RngStream& rng, int max_bits)
{
    auto const top = static_cast<std::int64_t>(rng.next_u32() % 400) - 200;
    auto const width = 1 + static_cast<int>(rng.next_u32() % static_cast<std::uint32_t>(max_bits));
    std::vector<std::int64_t> levels;
    for (int i = 0; i < width; ++i) {
        if (i == 0 || rng.bernoulli_half()) {
            levels.push_back(top - i);
        }
    }
    return BitSeries::from_levels(levels);
}

// Leading 1 at `top` followed by `width - 1` random levels.
BitSeries random_state(RngStream& rng, std::int64_t top, int width)
{
    std::vector<std::int64_t> levels{top};
    for (int i = 1; i < width; ++i) {
        if (rng.bernoulli_half()) {
            levels.push_back(top - i);
        }
    }
    return BitSeries::from_levels(levels);
}

}  // namespace

TEST_SUITE("carryfree")
{
    TEST_CASE("sum examples")
    {
        auto const x = BitSeries::from_string(3, "1010");  // z^3 + z
        auto const y = BitSeries::from_string(3, "1001");  // z^3 + 1
        auto const s = cf_add(x, y);
        CHECK(s.degree() == 1);
        CHECK(s == BitSeries::from_string(1, "11"));
        CHECK(cf_add(x, x).is_zero());
        CHECK(cf_add(x, BitSeries::zero()) == x);
        CHECK(BitSeries::zero().degree() == kZeroDegree);
    }

    TEST_CASE("product examples")
    {
        auto const p = BitSeries::from_string(1, "11");  // z + 1
        CHECK(cf_mul(p, p) == BitSeries::from_string(2, "101"));
        auto const x = BitSeries::from_string(5, "1101001");
        auto const shifted = cf_mul(x, BitSeries::monomial(7));
        CHECK(shifted.degree() == 12);
        CHECK(shifted.top_bits(7) == "1101001");
        CHECK(shifted == x.shifted(7));
        CHECK(cf_mul(x, BitSeries::zero()).is_zero());
    }

    TEST_CASE("window and truncation")
    {
        auto const x = BitSeries::from_string(100, "1" + std::string(70, '0') + "1");
        CHECK(x.truncated(64) == BitSeries::monomial(100));
        CHECK(x.truncated(72) == x);
        CHECK(x.above(29) == x);
        CHECK(x.above(30) == BitSeries::monomial(100));
        CHECK(x.lowest() == 29);
        CHECK(x.popcount() == 2);
    }

    TEST_CASE("arithmetic matches the set oracle and the algebra laws")
    {
        RngStream rng(2024, 0);
        for (int trial = 0; trial < 10000; ++trial) {
            auto const x = random_series(rng, 150);
            auto const y = random_series(rng, 150);
            auto const z = random_series(rng, 150);
            auto const xy = cf_mul(x, y);
            REQUIRE(as_set(cf_add(x, y)) == naive_add(as_set(x), as_set(y)));
            REQUIRE(cf_add(x, y) == cf_add(y, x));
            REQUIRE(cf_add(cf_add(x, y), z) == cf_add(x, cf_add(y, z)));
            REQUIRE(cf_mul(cf_mul(x, y), z) == cf_mul(x, cf_mul(y, z)));
            REQUIRE(cf_mul(x, cf_add(y, z)) == cf_add(xy, cf_mul(x, z)));
            REQUIRE(xy.degree() == x.degree() + y.degree());
            REQUIRE(cf_add(x, y).degree() <= std::max(x.degree(), y.degree()));
            if (trial % 20 == 0) {
                REQUIRE(as_set(xy) == naive_mul(as_set(x), as_set(y)));
            }
        }
    }

    TEST_CASE("gain validation and parsing")
    {
        CHECK_THROWS_AS(CarryFreeGain(0, 1), InvalidArgument);
        CHECK_THROWS_AS(CarryFreeGain(2, 0, {false, true}), InvalidArgument);
        CHECK_THROWS_AS(CarryFreeGain(2, 0, {true}), InvalidArgument);
        CHECK_THROWS_AS(CarryFreeGain(1, 0, {}, {{0, true}}), InvalidArgument);
        CHECK_THROWS_AS(CarryFreeGain(1, 0, {}, {}, {1}), InvalidArgument);

        auto const g = CarryFreeGain::parse("cf:1,0,fixed=-1:1,known=0");
        CHECK(g.g_det() == 1);
        CHECK(g.g_ran() == 0);
        CHECK(g.fixed_levels().at(-1));
        CHECK(g.known_levels() == std::set<std::int64_t>{0});
        CHECK(CarryFreeGain::parse(g.describe()).describe() == g.describe());
        CHECK(CarryFreeGain::parse("cf:4,1,det=101").det_bits() == std::vector<bool>{true, false, true});

        CHECK_THROWS_AS(CarryFreeGain::parse("uniform:1,2"), ConfigError);
        CHECK_THROWS_AS(CarryFreeGain::parse("cf:1"), ConfigError);
        CHECK_THROWS_AS(CarryFreeGain::parse("cf:1,x"), ConfigError);
        CHECK_THROWS_AS(CarryFreeGain::parse("cf:1,0,bogus=3"), ConfigError);
        CHECK_THROWS_AS(CarryFreeGain::parse("cf:0,1"), ConfigError);
    }

    TEST_CASE("capacities")
    {
        CHECK(cf_zero_error_capacity(CarryFreeGain(1, 0)) == 1);
        CHECK(cf_shannon_capacity(CarryFreeGain(1, 0)) == 2);
        CHECK(cf_zero_error_capacity(CarryFreeGain(3, 3)) == 0);
        CHECK(cf_shannon_capacity(CarryFreeGain(3, 3)) == 1);
        CHECK(cf_zero_error_capacity(CarryFreeGain(5, 1)) == 4);

        // The fixed bit below the random one is useless on its own.
        CarryFreeGain const trap(1, 0, {}, {{-1, true}});
        CHECK(cf_zero_error_capacity(trap) == 1);
        CarryFreeGain const revealed(1, 0, {}, {{-1, true}}, {0});
        CHECK(cf_zero_error_capacity(revealed) == 3);
        CHECK(cf_zero_error_capacity(revealed) - cf_zero_error_capacity(trap) == 2);
        // A revealed level that is not adjacent to g_ran contributes nothing.
        CHECK(cf_zero_error_capacity(CarryFreeGain(1, 0, {}, {}, {-1})) == 1);
        CHECK_THROWS_AS(cf_shannon_capacity(revealed), InvalidArgument);
    }

    TEST_CASE("one-step control cancels the top levels for every unknown gain")
    {
        RngStream rng(99, 0);
        CHECK_THROWS_AS(one_step_control(BitSeries::zero(), CarryFreeGain(1, 0), BitSeries::monomial(1)), ZeroState);

        for (int k = 1; k <= 12; ++k) {
            for (int rep = 0; rep < 6; ++rep) {
                // Deterministic part of width k above a random bit at g_ran.
                int const g_det = 3;
                int const g_ran = g_det - k;
                std::vector<bool> det(static_cast<std::size_t>(k));
                det[0] = true;
                for (std::size_t i = 1; i < det.size(); ++i) {
                    det[i] = rng.bernoulli_half();
                }
                CarryFreeGain const gain(g_det, g_ran, det);
                REQUIRE(gain.cancellable_levels() == k);

                auto const state = random_state(rng, 40, 30);
                REQUIRE(state.degree() == 40);
                auto const realized = gain.draw(rng);
                auto const step = one_step_control(state, gain, realized);
                CHECK(step.cancel_depth == k);
                CHECK(step.u.degree() == state.degree() - g_det);

                // Every assignment of the random levels g_ran and g_ran - 1.
                int const unknown = 2;
                for (int mask = 0; mask < (1 << unknown); ++mask) {
                    std::vector<std::int64_t> levels;
                    for (int i = 0; i < k; ++i) {
                        if (det[static_cast<std::size_t>(i)]) {
                            levels.push_back(g_det - i);
                        }
                    }
                    for (int j = 0; j < unknown; ++j) {
                        if ((mask >> j) & 1) {
                            levels.push_back(g_ran - j);
                        }
                    }
                    auto const b = BitSeries::from_levels(levels);
                    auto const next = cf_add(state, cf_mul(b, step.u));
                    for (int j = 0; j < k; ++j) {
                        REQUIRE_FALSE(next.bit(state.degree() - j));
                    }
                }
            }
        }
    }

    TEST_CASE("exhaustive: one-step control against all unknown bits for K <= 12")
    {
        // For each K, enumerate every state pattern in the top K levels and
        // every value of the first unknown gain bits; the top K levels of
        // state + b u must vanish in all cases.
        for (int k = 1; k <= 12; ++k) {
            CarryFreeGain const gain(k, 0);  // det bits 100..0
            int const patterns = 1 << (k - 1);
            for (int p = 0; p < patterns; ++p) {
                std::vector<std::int64_t> levels{50};
                for (int j = 1; j < k; ++j) {
                    if ((p >> (j - 1)) & 1) {
                        levels.push_back(50 - j);
                    }
                }
                auto const state = BitSeries::from_levels(levels);
                auto const realized = BitSeries::monomial(k);
                auto const step = one_step_control(state, gain, realized);
                for (int mask = 0; mask < 8; ++mask) {
                    std::vector<std::int64_t> gl{k};
                    for (int j = 0; j < 3; ++j) {
                        if ((mask >> j) & 1) {
                            gl.push_back(-j);
                        }
                    }
                    auto const next = cf_add(state, cf_mul(BitSeries::from_levels(gl), step.u));
                    for (int j = 0; j < k; ++j) {
                        REQUIRE_FALSE(next.bit(50 - j));
                    }
                }
            }
        }
    }

    TEST_CASE("side information: revealed bit lets the fixed bit count")
    {
        CarryFreeGain const gain(1, 0, {}, {{-1, true}}, {0});
        RngStream rng(5, 5);
        for (int rep = 0; rep < 200; ++rep) {
            auto const state = random_state(rng, 20, 20);
            auto const b = gain.draw(rng);
            auto const step = one_step_control(state, gain, b);
            REQUIRE(step.cancel_depth == 3);
            auto const next = cf_add(state, cf_mul(b, step.u));
            for (int j = 0; j < 3; ++j) {
                REQUIRE_FALSE(next.bit(20 - j));
            }
        }
    }

    TEST_CASE("degree dynamics follow the zero-error capacity")
    {
        DegreeParams p;
        p.horizon = 300;
        p.paths = 200;
        CarryFreeGain const gain(1, 0);
        CHECK(simulate_degrees(gain, 0, p).bounded);
        CHECK(simulate_degrees(gain, 1, p).bounded);
        auto const above = simulate_degrees(gain, 2, p);
        CHECK_FALSE(above.bounded);
        auto const far = simulate_degrees(gain, 3, p);
        CHECK_FALSE(far.bounded);
        CHECK(far.mean_growth_per_step == doctest::Approx(1.0).epsilon(0.1));

        // g_a = 0: degrees never exceed the start.
        auto const flat = simulate_degrees(gain, 0, p);
        for (auto d : flat.max_degree) {
            CHECK(d <= 0);
        }
    }

    TEST_CASE("one-step decay is capacity plus one")
    {
        CHECK(one_step_decay(CarryFreeGain(1, 0), 40000, 1) == doctest::Approx(2.0).epsilon(0.05 / 2));
        CHECK(one_step_decay(CarryFreeGain(4, 1), 40000, 2) == doctest::Approx(4.0).epsilon(0.05 / 4));
        CHECK(one_step_decay(CarryFreeGain(2, 2), 40000, 3) == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("degree simulation is thread-count independent and matches the reference")
    {
        DegreeParams p;
        p.horizon = 100;
        p.paths = 64;
        p.seed = 8;
        CarryFreeGain const gain(2, 0, {true, true});
        int const saved = omp_get_max_threads();
        omp_set_num_threads(1);
        auto const one = simulate_degrees(gain, 3, p);
        omp_set_num_threads(8);
        auto const eight = simulate_degrees(gain, 3, p);
        omp_set_num_threads(saved);
        auto const ref = reference::simulate_degrees(gain, 3, p);
        CHECK(one.max_degree == eight.max_degree);
        CHECK(one.mean_degree == eight.mean_degree);
        CHECK(one.max_degree == ref.max_degree);
        CHECK(one.mean_degree == ref.mean_degree);
    }
}
