#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ctlcap/error.hpp"
#include "ctlcap/quadrature.hpp"

using namespace ctlcap;

TEST_SUITE("quadrature")
{
    TEST_CASE("single panel is exact for low-degree polynomials")
    {
        auto const r = gauss_kronrod15([](double x) { return x * x * x - 2 * x + 1; }, -1.0, 2.0);
        CHECK(r.value == doctest::Approx(3.75).epsilon(1e-14));
    }

    TEST_CASE("smooth integrands")
    {
        CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0).value
              == doctest::Approx(std::numbers::e - 1).epsilon(1e-13));
        CHECK(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value
              == doctest::Approx(2.0).epsilon(1e-13));
        // Reversed limits flip the sign.
        CHECK(integrate([](double x) { return x; }, 1.0, 0.0).value == doctest::Approx(-0.5).epsilon(1e-14));
    }

    TEST_CASE("interior log singularity")
    {
        double const pole[] = {2.0};
        auto const r = integrate([](double b) { return std::log(std::abs(b - 2.0)); }, 1.0, 3.0, pole);
        CHECK(r.value == doctest::Approx(-2.0).epsilon(1e-11));
        CHECK(r.error < 1e-9);
    }

    TEST_CASE("log singularity at an endpoint and off-grid")
    {
        double const at_end[] = {1.0};
        CHECK(integrate([](double b) { return std::log(b - 1.0); }, 1.0, 2.0, at_end).value
              == doctest::Approx(-1.0).epsilon(1e-11));
        // Singularity at an irrational interior point.
        double const s = std::numbers::sqrt2;
        double const irr[] = {s};
        double const exact = (s - 1) * std::log(s - 1) - (s - 1) + (3 - s) * std::log(3 - s) - (3 - s);
        CHECK(integrate([=](double b) { return std::log(std::abs(b - s)); }, 1.0, 3.0, irr).value
              == doctest::Approx(exact).epsilon(1e-11));
    }

    TEST_CASE("inverse square root singularity")
    {
        double const at_zero[] = {0.0};
        CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, at_zero).value
              == doctest::Approx(2.0).epsilon(1e-8));
    }

    TEST_CASE("points outside the range are ignored")
    {
        double const outside[] = {-5.0, 10.0};
        CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0, outside).value == doctest::Approx(9.0).epsilon(1e-14));
    }

    TEST_CASE("non-integrable singularity is reported")
    {
        double const at_zero[] = {0.0};
        CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, 0.0, 1.0, at_zero), NonIntegrable);
    }
}
