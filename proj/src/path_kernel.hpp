#pragma once

// Per-path state evolution shared by the parallel and reference simulators.

#include <cmath>

#include "ctlcap/distributions.hpp"
#include "ctlcap/rng.hpp"
#include "ctlcap/simulate.hpp"

namespace ctlcap::detail {

inline constexpr double kClamp = 1e300;

inline double draw_gain(StrategySpec const& strategy, RngStream& rng)
{
    switch (strategy.kind) {
        case StrategySpec::Kind::LinearMemoryless:
            return strategy.d;
        case StrategySpec::Kind::ZeroControl:
            return 0.0;
        case StrategySpec::Kind::RandomGain:
            break;
    }
    return strategy.d_low + (strategy.d_high - strategy.d_low) * rng.uniform();
}

/// Evolves one path for `horizon` steps, calling visit(n, log2|X[n]|) for
/// n = 0..horizon. Draw order per step: B, then d (random strategies), then
/// V, then W. Returns true if the path was clamped.
template<class Visit>
bool run_path(SystemSpec const& spec, StrategySpec const& strategy, int horizon, RngStream& rng, Visit&& visit)
{
    double const log_x0 = std::log2(std::abs(spec.x0));
    visit(0, log_x0);

    if (spec.noise_free()) {
        // Multiplicative dynamics: track log2|X| only.
        double const log_a = std::log2(std::abs(spec.a));
        double log_x = log_x0;
        for (int n = 1; n <= horizon; ++n) {
            double const b = sample(spec.dist, rng);
            double const d = draw_gain(strategy, rng);
            log_x += log_a + std::log2(std::abs(1.0 + b * d));
            visit(n, log_x);
        }
        return false;
    }

    bool clamped = false;
    double x = spec.x0;
    for (int n = 1; n <= horizon; ++n) {
        double const b = sample(spec.dist, rng);
        double const d = draw_gain(strategy, rng);
        double const v = spec.obs_noise_std > 0.0 ? spec.obs_noise_std * rng.normal() : 0.0;
        double const w = spec.process_noise_std > 0.0 ? spec.process_noise_std * rng.normal() : 0.0;
        double const u = d * (x + v);
        x = spec.a * (x + b * u) + w;
        if (!(std::abs(x) <= kClamp)) {
            x = std::signbit(x) ? -kClamp : kClamp;
            clamped = true;
        }
        visit(n, std::log2(std::abs(x)));
    }
    return clamped;
}

}  // namespace ctlcap::detail
