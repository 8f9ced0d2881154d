#include <doctest.h>

#include <cmath>
#include <limits>

#include <omp.h>

#include "ctlcap/error.hpp"
#include "ctlcap/simulate.hpp"

using namespace ctlcap;

namespace {

SimulationReport run_with_threads(int threads, SystemSpec const& spec, StrategySpec const& s, SimulationParams const& p)
{
    int const saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    auto r = simulate(spec, s, p);
    omp_set_num_threads(saved);
    return r;
}

void check_identical(SimulationReport const& x, SimulationReport const& y)
{
    CHECK(x.mean_log2 == y.mean_log2);
    CHECK(x.log2_moment == y.log2_moment);
    CHECK(x.fraction_above == y.fraction_above);
    CHECK(x.growth_slope_bits == y.growth_slope_bits);
    CHECK(x.moment_slope_bits == y.moment_slope_bits);
    CHECK(x.overflow_paths == y.overflow_paths);
}

void check_close(std::vector<double> const& x, std::vector<double> const& y, double tol)
{
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isfinite(x[i]) || std::isfinite(y[i])) {
            CHECK(std::abs(x[i] - y[i]) <= tol * std::max(1.0, std::abs(x[i])));
        }
    }
}

}  // namespace

TEST_SUITE("simulate")
{
    TEST_CASE("argument validation")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        SimulationParams p;
        p.horizon = 10;
        p.paths = 10;
        CHECK_THROWS_AS(simulate({0.5, u}, StrategySpec::zero(), p), InvalidArgument);
        CHECK_THROWS_AS(simulate({2.0, u, 0.0}, StrategySpec::zero(), p), InvalidArgument);
        CHECK_THROWS_AS(StrategySpec::random_gain(1, 0), InvalidArgument);
        p.paths = 0;
        CHECK_THROWS_AS(simulate({2.0, u}, StrategySpec::zero(), p), InvalidArgument);
    }

    TEST_CASE("zero control grows at log2 a exactly")
    {
        SimulationParams p;
        p.horizon = 50;
        p.paths = 100;
        p.etas = {2.0};
        auto const r = simulate({4.0, ActuationDistribution::uniform(1, 3)}, StrategySpec::zero(), p);
        for (int n = 0; n <= p.horizon; ++n) {
            CHECK(r.mean_log2[static_cast<std::size_t>(n)] == doctest::Approx(2.0 * n));
        }
        CHECK(r.growth_slope_bits == doctest::Approx(2.0));
        CHECK(r.moment_slope_bits[0] == doctest::Approx(2.0));
    }

    TEST_CASE("growth slope tracks log2 a minus capacity")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        auto const cap = shannon_capacity(u);
        SimulationParams p;
        p.horizon = 400;
        p.paths = 4000;
        auto const r = simulate({8.0, u}, StrategySpec::linear(*cap.optimal_d), p);
        CHECK(r.growth_slope_bits == doctest::Approx(3.0 - cap.value_bits).epsilon(0.05));
    }

    TEST_CASE("reports do not depend on the thread count")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        SimulationParams p;
        p.horizon = 100;
        p.paths = 5000;
        p.etas = {0.5, 2.0};
        p.thresholds = {10.0, 1e6};
        p.seed = 11;
        SystemSpec const spec{6.0, u};
        auto const one = run_with_threads(1, spec, StrategySpec::linear(-0.42), p);
        auto const eight = run_with_threads(8, spec, StrategySpec::linear(-0.42), p);
        auto const three = run_with_threads(3, spec, StrategySpec::random_gain(-0.8, 0.0), p);
        auto const three_again = run_with_threads(5, spec, StrategySpec::random_gain(-0.8, 0.0), p);
        check_identical(one, eight);
        check_identical(three, three_again);

        SystemSpec const noisy{2.0, ActuationDistribution::uniform(2, 6), 1.0, 1.0, 1.0};
        check_identical(run_with_threads(1, noisy, StrategySpec::linear(-0.24), p),
                        run_with_threads(8, noisy, StrategySpec::linear(-0.24), p));
    }

    TEST_CASE("parallel kernel agrees with the serial reference")
    {
        SimulationParams p;
        p.horizon = 60;
        p.paths = 3000;
        p.etas = {1.0, 4.0};
        p.thresholds = {100.0};
        p.seed = 5;
        for (auto const& spec : {SystemSpec{5.0, ActuationDistribution::gaussian(4, 1)},
                                 SystemSpec{1.5, ActuationDistribution::scaled_bernoulli(1, 0.5)},
                                 SystemSpec{2.0, ActuationDistribution::uniform(2, 6), 1.0, 1.0, 0.5}}) {
            auto const fast = simulate(spec, StrategySpec::linear(-0.25), p);
            auto const slow = reference::simulate(spec, StrategySpec::linear(-0.25), p);
            check_close(fast.mean_log2, slow.mean_log2, 1e-12);
            for (std::size_t e = 0; e < p.etas.size(); ++e) {
                check_close(fast.log2_moment[e], slow.log2_moment[e], 1e-12);
            }
            CHECK(fast.fraction_above == slow.fraction_above);
            CHECK(fast.overflow_paths == slow.overflow_paths);
        }
    }

    TEST_CASE("noise-free spec with zero stds matches the multiplicative mode")
    {
        SimulationParams p;
        p.horizon = 30;
        p.paths = 500;
        auto const u = ActuationDistribution::uniform(1, 3);
        auto const r = simulate({3.0, u, 2.0, 0.0, 0.0}, StrategySpec::linear(-0.4), p);
        auto const s = simulate({3.0, u, 1.0, 0.0, 0.0}, StrategySpec::linear(-0.4), p);
        check_close(r.mean_log2, s.mean_log2, 1e-12);
    }

    TEST_CASE("slopes and verdicts")
    {
        std::vector<double> const line{1, 3, 5, 7, 9};
        CHECK(fitted_slope(line, 0, 4) == doctest::Approx(2.0));
        CHECK(fitted_slope(line, 2, 4) == doctest::Approx(2.0));
        CHECK_THROWS_AS(fitted_slope(line, 3, 3), InvalidArgument);
        std::vector<double> const dead{0, -1, -std::numeric_limits<double>::infinity()};
        CHECK(fitted_slope(dead, 0, 2) == -std::numeric_limits<double>::infinity());

        CHECK(classify_slope(-0.1) == Verdict::Stable);
        CHECK(classify_slope(0.01) == Verdict::Marginal);
        CHECK(classify_slope(0.1) == Verdict::Unstable);
        CHECK(to_string(Verdict::Marginal) == "marginal");
    }

    TEST_CASE("threshold scan brackets capacity")
    {
        SimulationParams p;
        p.horizon = 400;
        p.paths = 2000;
        double const grid[] = {5.0, 5.6, 6.4, 7.0};
        auto const scan = threshold_scan(ActuationDistribution::uniform(1, 3), CapacitySense::shannon(), grid, p);
        CHECK(scan.points.front().verdict == Verdict::Stable);
        CHECK(scan.points.back().verdict == Verdict::Unstable);
        REQUIRE(scan.critical_log2_a);
        CHECK(*scan.critical_log2_a == doctest::Approx(scan.capacity_bits).epsilon(0.03));
    }

    TEST_CASE("strong converse refuses atoms")
    {
        double const m[] = {1e6};
        SimulationParams p;
        CHECK_THROWS_AS(strong_converse_experiment(ActuationDistribution::scaled_bernoulli(1, 0.5), 2.0, m, p),
                        InvalidArgument);
    }

    TEST_CASE("moment ceiling")
    {
        SystemSpec const spec{2.0, ActuationDistribution::uniform(2, 6), 1.0, 1.0, 1.0};
        double const d = *second_moment_closed_form(spec.dist).optimal_d;
        CHECK(std::isfinite(moment_ceiling(spec, d, 2.0)));
        CHECK(std::isfinite(moment_ceiling(spec, d, 0.5)));
        SystemSpec const fast{4.0, ActuationDistribution::uniform(2, 6), 1.0, 1.0, 1.0};
        CHECK(moment_ceiling(fast, d, 2.0) == std::numeric_limits<double>::infinity());
        // At the second-moment optimizer the contraction is a 2^(-C_2) = a / sqrt(13).
        CHECK(moment_contraction(spec, d, 2.0) == doctest::Approx(2.0 / std::sqrt(13.0)).epsilon(1e-10));
        CHECK(moment_contraction(fast, d, 2.0) == doctest::Approx(4.0 / std::sqrt(13.0)).epsilon(1e-10));
        // Without noise the ceiling is the initial moment.
        SystemSpec const quiet{2.0, ActuationDistribution::uniform(2, 6), 3.0};
        CHECK(moment_ceiling(quiet, d, 2.0) == doctest::Approx(9.0));
    }

    TEST_CASE("scaling equivalence is exact in the log domain")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        CHECK(scaling_equivalence_check(u, 1.0, -0.4, 100, 1) == 0.0);
        CHECK(scaling_equivalence_check(u, 7.0, 0.0, 100, 1) == 0.0);
        CHECK(scaling_equivalence_check(u, 7.0, -0.4, 200, 2) <= 1e-9);
        CHECK(scaling_equivalence_check(ActuationDistribution::scaled_bernoulli(2, 0.5), 3.0, -0.5, 50, 3) == 0.0);
    }
}
