#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <variant>

#include "ctlcap/distributions.hpp"
#include "ctlcap/error.hpp"

using namespace ctlcap;

namespace {

double empirical_mean(ActuationDistribution const& d, int n, std::uint64_t seed)
{
    RngStream rng(seed, 0);
    double s = 0;
    for (int i = 0; i < n; ++i) {
        s += sample(d, rng);
    }
    return s / n;
}

}  // namespace

TEST_SUITE("distributions")
{
    TEST_CASE("constructors validate their parameters")
    {
        CHECK_THROWS_AS(ActuationDistribution::uniform(3, 1), InvalidArgument);
        CHECK_THROWS_AS(ActuationDistribution::gaussian(0, 0), InvalidArgument);
        CHECK_THROWS_AS(ActuationDistribution::scaled_bernoulli(0, 0.5), InvalidArgument);
        CHECK_THROWS_AS(ActuationDistribution::scaled_bernoulli(1, 1.5), InvalidArgument);
        CHECK_THROWS_AS(ActuationDistribution::empirical({}), InvalidArgument);
        CHECK_THROWS_AS(ActuationDistribution::mixture({{0.5, ActuationDistribution::uniform(0, 1)}}),
                        InvalidArgument);
    }

    TEST_CASE("support summaries")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        CHECK(u.support().lower == 1);
        CHECK(u.support().upper == 3);
        CHECK_FALSE(u.support().contains_zero);
        CHECK(u.support().atoms.empty());

        CHECK(ActuationDistribution::uniform(-1, 3).support().contains_zero);
        CHECK_FALSE(ActuationDistribution::gaussian(4, 1).support().bounded());

        auto const e = ActuationDistribution::scaled_bernoulli(2, 0.3);
        CHECK(e.support().contains_zero);
        CHECK(e.support().has_nonzero_atom);
        REQUIRE(e.support().atoms.size() == 2);
    }

    TEST_CASE("closed-form moments")
    {
        auto const m = moments(ActuationDistribution::uniform(1, 3));
        CHECK(m.mean == doctest::Approx(2));
        CHECK(m.variance == doctest::Approx(1.0 / 3.0));

        auto const b = moments(ActuationDistribution::scaled_bernoulli(2, 0.3));
        CHECK(b.mean == doctest::Approx(0.6));
        CHECK(b.variance == doctest::Approx(4 * 0.3 * 0.7));

        auto const mix = moments(ActuationDistribution::mixture(
            {{0.5, ActuationDistribution::point_mass(0)}, {0.5, ActuationDistribution::point_mass(2)}}));
        CHECK(mix.mean == doctest::Approx(1));
        CHECK(mix.variance == doctest::Approx(1));
    }

    TEST_CASE("expect matches moments")
    {
        for (auto const& d : {ActuationDistribution::uniform(1, 3), ActuationDistribution::gaussian(4, 1),
                              ActuationDistribution::scaled_bernoulli(2, 0.3),
                              ActuationDistribution::truncated_gaussian(0, 1, -0.5, 2.0)}) {
            auto const m = moments(d);
            CHECK(expect(d, [](double b) { return b; }) == doctest::Approx(m.mean).epsilon(1e-9));
            CHECK(expect(d, [](double b) { return b * b; }) == doctest::Approx(m.second_moment).epsilon(1e-9));
            CHECK(expect(d, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-10));
        }
    }

    TEST_CASE("sampling reproduces the mean")
    {
        CHECK(empirical_mean(ActuationDistribution::uniform(1, 3), 100000, 1) == doctest::Approx(2).epsilon(0.01));
        CHECK(empirical_mean(ActuationDistribution::gaussian(4, 1), 100000, 2) == doctest::Approx(4).epsilon(0.01));
        CHECK(empirical_mean(ActuationDistribution::scaled_bernoulli(2, 0.3), 100000, 3)
              == doctest::Approx(0.6).epsilon(0.02));
        CHECK(empirical_mean(ActuationDistribution::truncated_gaussian(0, 1, 0, 1e300), 100000, 4)
              == doctest::Approx(std::sqrt(2 / M_PI)).epsilon(0.01));
    }

    TEST_CASE("restriction to cells")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        auto const r = restrict_to_cell(u, {1.5, 2.0});
        CHECK(r.probability == doctest::Approx(0.25));
        CHECK(moments(r.conditional).mean == doctest::Approx(1.75));
        CHECK_THROWS_AS(restrict_to_cell(u, {4, 5}), EmptyCell);

        auto const g = ActuationDistribution::gaussian(0, 1);
        auto const half = restrict_to_cell(g, {0, 1e300});
        CHECK(half.probability == doctest::Approx(0.5));
        CHECK(std::holds_alternative<TruncatedGaussian>(half.conditional.kind()));

        auto const e = ActuationDistribution::scaled_bernoulli(2, 0.3);
        auto const top = restrict_to_cell(e, {1, 2, true});
        CHECK(top.probability == doctest::Approx(0.3));
        CHECK(moments(top.conditional).mean == doctest::Approx(2));
        // Half-open cell excludes the atom at its upper edge.
        CHECK_THROWS_AS(restrict_to_cell(e, {1, 2, false}), EmptyCell);
    }

    TEST_CASE("scaling")
    {
        auto const u = ActuationDistribution::uniform(1, 3).scaled(-2);
        CHECK(u.support().lower == -6);
        CHECK(u.support().upper == -2);
        CHECK(moments(ActuationDistribution::gaussian(4, 1).scaled(0.5)).variance == doctest::Approx(0.25));
    }

    TEST_CASE("spec grammar")
    {
        auto const u = parse_distribution("uniform:1,3");
        CHECK(std::holds_alternative<Uniform>(u.kind()));
        CHECK(u.describe() == "uniform:1,3");
        CHECK(std::holds_alternative<Gaussian>(parse_distribution("gaussian:4,1").kind()));
        CHECK(std::holds_alternative<ScaledBernoulli>(parse_distribution("erasure:1,0.5").kind()));
        auto const mix = parse_distribution("mixture:0.25*uniform:1,3|0.75*gaussian:0,1");
        CHECK(moments(mix).mean == doctest::Approx(0.5));

        CHECK_THROWS_AS(parse_distribution("uniform"), ConfigError);
        CHECK_THROWS_AS(parse_distribution("uniform:1"), ConfigError);
        CHECK_THROWS_AS(parse_distribution("uniform:3,1"), ConfigError);
        CHECK_THROWS_AS(parse_distribution("cauchy:0,1"), ConfigError);
        CHECK_THROWS_AS(parse_distribution("uniform:1,x"), ConfigError);
        CHECK_THROWS_AS(parse_distribution("empirical:@/nonexistent/file.csv"), ConfigError);
    }

    TEST_CASE("empirical samples from a file")
    {
        auto const path = (std::filesystem::temp_directory_path() / "ctlcap_empirical_samples_test.csv").string();
        {
            std::ofstream f(path);
            f << "1\n2\n3\n6\n";
        }
        auto const d = parse_distribution("empirical:@" + path);
        CHECK(moments(d).mean == doctest::Approx(3));
        CHECK(d.support().atoms.size() == 4);
    }
}
