#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctlcap/capacity.hpp"
#include "ctlcap/distributions.hpp"

namespace ctlcap {

/// Scalar plant X[n+1] = a (X[n] + B[n] U[n]) + W[n], Y[n] = X[n] + V[n].
struct SystemSpec
{
    double a = 1.0;
    ActuationDistribution dist;
    double x0 = 1.0;
    /// Standard deviation of the Gaussian process noise W; 0 disables it.
    double process_noise_std = 0.0;
    /// Standard deviation of the Gaussian observation noise V; 0 disables it.
    double obs_noise_std = 0.0;

    void validate() const;
    bool noise_free() const noexcept { return process_noise_std == 0.0 && obs_noise_std == 0.0; }
};

/// Control law U[n] = d[n] Y[n].
struct StrategySpec
{
    enum class Kind { LinearMemoryless, ZeroControl, RandomGain };

    Kind kind = Kind::ZeroControl;
    double d = 0.0;
    /// Range of the per-step gain for RandomGain, drawn uniformly and independently.
    double d_low = 0.0;
    double d_high = 0.0;

    static StrategySpec linear(double d);
    static StrategySpec zero();
    static StrategySpec random_gain(double low, double high);

    std::string name() const;
};

struct SimulationParams
{
    int horizon = 2000;
    int paths = 10000;
    std::vector<double> etas;
    std::vector<double> thresholds{1e6};
    std::uint64_t seed = 0;
};

struct SimulationReport
{
    int horizon = 0;
    int paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> etas;
    std::vector<double> thresholds;

    /// E[log2 |X[n] / x0|]; -inf once any path is exactly zero.
    std::vector<double> mean_log2;
    /// log2 E[|X[n] / x0|^eta], one array per eta.
    std::vector<std::vector<double>> log2_moment;
    /// P(|X[n]| >= M), one array per threshold.
    std::vector<std::vector<double>> fraction_above;

    /// Least-squares slope of mean_log2 over the final half of the horizon.
    double growth_slope_bits = 0.0;
    /// Slope of (1/eta) log2 E|X[n]|^eta over the final half, one per eta.
    std::vector<double> moment_slope_bits;

    /// Paths clamped at |X| = 1e300 (additive-noise mode only).
    int overflow_paths = 0;
};

/// Monte Carlo over independent paths. Each path owns the counter-based
/// substream (seed, path index); partial statistics are reduced over a fixed
/// block tree, so reports are bitwise identical for any thread count.
SimulationReport simulate(SystemSpec const& spec, StrategySpec const& strategy, SimulationParams const& params);

/// Least-squares slope of values[first..last] against the index.
double fitted_slope(std::span<double const> values, std::size_t first, std::size_t last);

enum class Verdict { Stable, Marginal, Unstable };
std::string to_string(Verdict v);

/// Dead band around zero slope inside which a verdict is `Marginal`.
inline constexpr double kVerdictDeadBand = 0.02;

Verdict classify_slope(double slope);

struct ScanPoint
{
    double a;
    double log2_a;
    double slope;
    Verdict verdict;
};

struct ScanResult
{
    CapacitySense sense;
    double capacity_bits = 0.0;
    double d_star = 0.0;
    std::vector<ScanPoint> points;
    /// Interpolated zero crossing of the slope in log2 a, when bracketed.
    std::optional<double> critical_log2_a;
};

/// Simulates the plant at each a with the capacity-achieving gain and
/// classifies the growth of the sense's statistic.
ScanResult threshold_scan(ActuationDistribution const& dist,
                          CapacitySense const& sense,
                          std::span<double const> a_grid,
                          SimulationParams params,
                          CapacityQuery query = {});

struct ConverseTrace
{
    StrategySpec strategy;
    /// P(|X[n]| >= M) per threshold and step.
    std::vector<std::vector<double>> fraction_above;
    /// Final-step fraction for each threshold.
    std::vector<double> final_fraction;
};

struct ConverseResult
{
    double a = 0.0;
    double shannon_capacity_bits = 0.0;
    std::vector<double> thresholds;
    std::vector<ConverseTrace> traces;
};

/// Tightness failure above capacity: tracks P(|X[n]| >= M) under the optimal
/// gain, zero control, and a gain redrawn uniformly on [2 d*, 0] each step.
/// Laws with atoms are refused.
ConverseResult strong_converse_experiment(ActuationDistribution const& dist,
                                          double a,
                                          std::span<double const> thresholds,
                                          SimulationParams params);

struct AdditiveNoiseVerdict
{
    bool bounded = false;
    double slope_bits = 0.0;
    double sup_moment = 0.0;
    /// Upper bound on sup_n E|X[n]/x0|^eta from the one-step moment recursion;
    /// +inf when the recursion does not contract.
    double ceiling = 0.0;
    /// |a| (E|1 + B d|^eta)^(1/eta); the moment grows geometrically when this exceeds 1.
    double contraction = 0.0;
    bool diverges = false;
    int overflow_paths = 0;
    SimulationReport report;
};

/// Runs the noisy plant with U = d* Y and judges whether the eta-th moment stays bounded.
AdditiveNoiseVerdict additive_noise_check(SystemSpec const& spec, double d_star, double eta, SimulationParams params);

/// Bound on sup_n E|X[n]|^eta for the noisy plant under U = d Y.
double moment_ceiling(SystemSpec const& spec, double d, double eta);

double moment_contraction(SystemSpec const& spec, double d, double eta);

/// Runs S (a = 1, U = d X) and S_a (U_a = d X_a, i.e. a^k U[k]) on the same gain draws
/// and returns max_k |X_a[k] - a^k X[k]| / |a^k X[k]|.
double scaling_equivalence_check(ActuationDistribution const& dist, double a, double d, int horizon, std::uint64_t seed);

namespace reference {

/// Single-threaded straight-line version of ctlcap::simulate, kept as a test oracle.
SimulationReport simulate(SystemSpec const& spec, StrategySpec const& strategy, SimulationParams const& params);

}  // namespace reference

}  // namespace ctlcap
