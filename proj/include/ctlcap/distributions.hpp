#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ctlcap/quadrature.hpp"
#include "ctlcap/rng.hpp"

namespace ctlcap {

class ActuationDistribution;

/// Continuous uniform law on [lower, upper].
struct Uniform
{
    double lower;
    double upper;
};

struct Gaussian
{
    double mean;
    double stddev;
};

/// Two-point law: `beta` with probability `p`, zero otherwise (erasure channel).
struct ScaledBernoulli
{
    double beta;
    double p;
};

/// Gaussian conditioned on [lower, upper]; produced by restricting a Gaussian.
struct TruncatedGaussian
{
    double mean;
    double stddev;
    double lower;
    double upper;
};

/// Pure atom set; `samples` are kept sorted.
struct Empirical
{
    std::vector<double> samples;
};

struct Mixture
{
    std::vector<double> weights;
    std::vector<std::shared_ptr<ActuationDistribution const>> components;
};

struct Atom
{
    double location;
    double mass;
};

struct SupportInfo
{
    double lower;
    double upper;
    std::vector<Atom> atoms;
    bool contains_zero;
    bool has_nonzero_atom;

    bool bounded() const noexcept;
};

struct Moments
{
    double mean;
    double variance;
    double second_moment;
};

/// Half-open interval [lower, upper), or closed when `closed_upper` is set.
struct Cell
{
    double lower;
    double upper;
    bool closed_upper = false;

    bool contains(double x) const noexcept
    {
        return x >= lower && (x < upper || (closed_upper && x == upper));
    }
};

struct Restriction;

/// Law p_B of the multiplicative actuation gain.
///
/// Values are immutable after construction and cheap to copy; mixtures share
/// their components.
class ActuationDistribution
{
public:
    using Kind = std::variant<Uniform, Gaussian, ScaledBernoulli, TruncatedGaussian, Empirical, Mixture>;

    static ActuationDistribution uniform(double lower, double upper);
    static ActuationDistribution gaussian(double mean, double stddev);
    static ActuationDistribution scaled_bernoulli(double beta, double p);
    static ActuationDistribution truncated_gaussian(double mean, double stddev, double lower, double upper);
    static ActuationDistribution empirical(std::vector<double> samples);
    static ActuationDistribution point_mass(double location);
    static ActuationDistribution mixture(std::vector<std::pair<double, ActuationDistribution>> parts);

    Kind const& kind() const noexcept { return kind_; }
    SupportInfo const& support() const noexcept { return support_; }

    /// Range that holds all probability mass up to the Gaussian +-10 sigma cut.
    std::pair<double, double> effective_range() const;

    /// Law of c * B for c != 0.
    ActuationDistribution scaled(double c) const;

    std::string describe() const;

private:
    explicit ActuationDistribution(Kind kind);

    Kind kind_;
    SupportInfo support_;
};

/// Width of the Gaussian tail cut, in standard deviations.
inline constexpr double kGaussianTailSigmas = 10.0;

SupportInfo const& support(ActuationDistribution const& dist);

Moments moments(ActuationDistribution const& dist);

double sample(ActuationDistribution const& dist, RngStream& rng);

/// E[f(B)]: atoms summed exactly, densities integrated adaptively with panels
/// graded toward each listed singular point.
double expect(ActuationDistribution const& dist,
              std::function<double(double)> const& integrand,
              std::span<double const> singularities = {},
              QuadratureOptions const& options = {});

struct Restriction
{
    double probability;
    ActuationDistribution conditional;
};

/// P(B in cell) and the law of B given B in cell. Throws EmptyCell.
Restriction restrict_to_cell(ActuationDistribution const& dist, Cell const& cell);

/// Parses `uniform:b1,b2`, `gaussian:mu,sigma`, `erasure:beta,p`,
/// `mixture:w1*<spec>|w2*<spec>` and `empirical:@path.csv`.
/// Throws ConfigError.
ActuationDistribution parse_distribution(std::string_view spec);

}  // namespace ctlcap
