#include <doctest.h>

#include <cmath>
#include <limits>

#include "ctlcap/error.hpp"
#include "ctlcap/side_info.hpp"

using namespace ctlcap;

namespace {

// Uniform law with unit standard deviation and the given mean.
ActuationDistribution unit_uniform(double mean)
{
    return ActuationDistribution::uniform(mean - std::sqrt(3.0), mean + std::sqrt(3.0));
}

}  // namespace

TEST_SUITE("side_info")
{
    TEST_CASE("cell probabilities are validated")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        CHECK_THROWS_AS(SideInformationModel({{"a", 0.5, u}}), InvalidArgument);
        CHECK_THROWS_AS(SideInformationModel({{"a", 0.0, u}, {"b", 1.0, u}}), InvalidArgument);
        CHECK_NOTHROW(SideInformationModel({{"a", 0.25, u}, {"b", 0.75, u}}));
    }

    TEST_CASE("partitions recombine to the base law")
    {
        for (auto const& d : {ActuationDistribution::uniform(-0.5, 2.5), ActuationDistribution::scaled_bernoulli(2, 0.3)}) {
            for (int k = 0; k <= 4; ++k) {
                auto const m = uniform_bit_partition(d, k);
                CHECK(m.consistency_error(d) < 1e-10);
            }
        }
        auto const g = ActuationDistribution::gaussian(0, 1);
        double const edges[] = {-1e300, -1, 0, 1, 1e300};
        auto const m = SideInformationModel::from_edges(g, edges);
        CHECK(m.size() == 4);
        CHECK(m.consistency_error(g) < 1e-8);
    }

    TEST_CASE("erasure partition drops empty cells")
    {
        auto const m = uniform_bit_partition(ActuationDistribution::scaled_bernoulli(2, 0.3), 3);
        CHECK(m.size() == 2);
        CHECK_THROWS_AS(uniform_bit_partition(ActuationDistribution::gaussian(0, 1), 2), UnboundedSupport);
        CHECK_THROWS_AS(uniform_bit_partition(ActuationDistribution::uniform(0, 1), 21), InvalidArgument);
    }

    TEST_CASE("no side information reproduces the base capacities")
    {
        auto const u = ActuationDistribution::uniform(1, 3);
        auto const m = uniform_bit_partition(u, 0);
        CHECK(std::abs(shannon_capacity_with_si(m).value_bits - shannon_capacity(u).value_bits) < 1e-8);
        CHECK(std::abs(eta_capacity_with_si(m, 2).value_bits - eta_capacity(u, 2).value_bits) < 1e-8);
    }

    TEST_CASE("erasure revealed by one bit")
    {
        // Knowing whether B = 0 or B = beta makes the channel perfect when B = beta.
        auto const m = uniform_bit_partition(ActuationDistribution::scaled_bernoulli(1, 0.5), 1);
        CHECK(shannon_capacity_with_si(m).value_bits == std::numeric_limits<double>::infinity());
        // Only the zero cell limits the moment: E min |1 + B d|^2 = 1/2.
        CHECK(eta_capacity_with_si(m, 2).value_bits == doctest::Approx(0.5).epsilon(1e-8));
    }

    TEST_CASE("low SNR: the first bit is worth more than one bit")
    {
        auto const curve = si_value_curve(unit_uniform(0.1), 4, CapacitySense::shannon());
        CHECK(curve[0].value_bits == doctest::Approx(0.6911).epsilon(1e-3));
        CHECK(curve[1].value_bits - curve[0].value_bits > 1.0);
    }

    TEST_CASE("high SNR: each further bit is worth about one bit")
    {
        auto const curve = si_value_curve(unit_uniform(10), 4, CapacitySense::shannon());
        for (int k = 3; k <= 4; ++k) {
            double const gain = curve[k].value_bits - curve[k - 1].value_bits;
            CHECK(gain >= 0.9);
            CHECK(gain <= 1.1);
        }
    }

    TEST_CASE("refinement never hurts")
    {
        for (double mean : {0.1, 1.0, 10.0}) {
            for (auto const& sense : {CapacitySense::shannon(), CapacitySense::moment(2)}) {
                auto const curve = si_value_curve(unit_uniform(mean), 4, sense);
                for (std::size_t k = 1; k < curve.size(); ++k) {
                    CHECK(curve[k].value_bits >= curve[k - 1].value_bits - 1e-9);
                }
            }
        }
    }

    TEST_CASE("zero-error sense is rejected")
    {
        auto const m = uniform_bit_partition(ActuationDistribution::uniform(1, 3), 1);
        CHECK_THROWS_AS(capacity_with_si(m, CapacitySense::zero_error()), InvalidArgument);
    }
}
