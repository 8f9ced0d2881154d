#include "ctlcap/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "ctlcap/error.hpp"
#include "path_kernel.hpp"

namespace ctlcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper bound on the number of reduction blocks; bounds memory for long horizons.
constexpr int kMaxBlocks = 512;
constexpr int kMinBlockPaths = 64;

// Base-2 log-sum-exp accumulator: value = sum * 2^max.
struct LogSum
{
    double max = -kInf;
    double sum = 0.0;

    void add(double log_value)
    {
        if (log_value == -kInf) {
            return;
        }
        if (log_value > max) {
            sum = sum * std::exp2(max - log_value) + 1.0;
            max = log_value;
        } else {
            sum += std::exp2(log_value - max);
        }
    }

    void merge(LogSum const& other)
    {
        if (other.sum == 0.0) {
            return;
        }
        if (sum == 0.0) {
            *this = other;
            return;
        }
        double const m = std::max(max, other.max);
        sum = sum * std::exp2(max - m) + other.sum * std::exp2(other.max - m);
        max = m;
    }

    double log2_mean(double count) const { return sum > 0.0 ? max + std::log2(sum / count) : -kInf; }
};

struct BlockStats
{
    std::vector<double> sum_log;
    std::vector<LogSum> moments;             // eta-major
    std::vector<std::int64_t> above;         // threshold-major
    int overflow = 0;

    BlockStats(std::size_t steps, std::size_t n_eta, std::size_t n_thresh)
        : sum_log(steps, 0.0), moments(steps * n_eta), above(steps * n_thresh, 0)
    {
    }

    void merge(BlockStats const& other)
    {
        for (std::size_t i = 0; i < sum_log.size(); ++i) {
            sum_log[i] += other.sum_log[i];
        }
        for (std::size_t i = 0; i < moments.size(); ++i) {
            moments[i].merge(other.moments[i]);
        }
        for (std::size_t i = 0; i < above.size(); ++i) {
            above[i] += other.above[i];
        }
        overflow += other.overflow;
    }
};

SimulationReport finalize(BlockStats const& stats, SystemSpec const&, SimulationParams const& params)
{
    auto const steps = static_cast<std::size_t>(params.horizon) + 1;
    double const count = params.paths;
    SimulationReport r;
    r.horizon = params.horizon;
    r.paths = params.paths;
    r.seed = params.seed;
    r.etas = params.etas;
    r.thresholds = params.thresholds;
    r.mean_log2.resize(steps);
    for (std::size_t n = 0; n < steps; ++n) {
        r.mean_log2[n] = stats.sum_log[n] / count;
    }
    for (std::size_t e = 0; e < params.etas.size(); ++e) {
        std::vector<double> m(steps);
        for (std::size_t n = 0; n < steps; ++n) {
            m[n] = stats.moments[e * steps + n].log2_mean(count);
        }
        r.log2_moment.push_back(std::move(m));
    }
    for (std::size_t t = 0; t < params.thresholds.size(); ++t) {
        std::vector<double> f(steps);
        for (std::size_t n = 0; n < steps; ++n) {
            f[n] = static_cast<double>(stats.above[t * steps + n]) / count;
        }
        r.fraction_above.push_back(std::move(f));
    }
    r.overflow_paths = stats.overflow;

    std::size_t const first = steps / 2;
    r.growth_slope_bits = fitted_slope(r.mean_log2, first, steps - 1);
    for (std::size_t e = 0; e < params.etas.size(); ++e) {
        r.moment_slope_bits.push_back(fitted_slope(r.log2_moment[e], first, steps - 1) / params.etas[e]);
    }
    return r;
}

void validate_params(SimulationParams const& params)
{
    if (params.horizon < 1 || params.paths < 1) {
        throw InvalidArgument("simulation needs horizon >= 1 and paths >= 1");
    }
    for (double eta : params.etas) {
        if (!(eta > 0.0)) {
            throw InvalidArgument("moment orders must be positive");
        }
    }
    for (double m : params.thresholds) {
        if (!(m > 0.0)) {
            throw InvalidArgument("tightness thresholds must be positive");
        }
    }
}

// Accumulates one path into `stats`, with statistics relative to x0.
void accumulate_path(BlockStats& stats,
                     SystemSpec const& spec,
                     StrategySpec const& strategy,
                     SimulationParams const& params,
                     std::vector<double> const& log_thresholds,
                     std::uint64_t path)
{
    auto const steps = static_cast<std::size_t>(params.horizon) + 1;
    double const log_x0 = std::log2(std::abs(spec.x0));
    RngStream rng(params.seed, path);
    bool const clamped = detail::run_path(spec, strategy, params.horizon, rng, [&](int n, double log_x) {
        auto const i = static_cast<std::size_t>(n);
        double const rel = log_x - log_x0;
        stats.sum_log[i] += rel;
        for (std::size_t e = 0; e < params.etas.size(); ++e) {
            stats.moments[e * steps + i].add(params.etas[e] * rel);
        }
        for (std::size_t t = 0; t < log_thresholds.size(); ++t) {
            if (log_x >= log_thresholds[t]) {
                ++stats.above[t * steps + i];
            }
        }
    });
    stats.overflow += clamped ? 1 : 0;
}

std::vector<double> log_thresholds_of(SimulationParams const& params)
{
    std::vector<double> out;
    for (double m : params.thresholds) {
        out.push_back(std::log2(m));
    }
    return out;
}

double gaussian_abs_moment(double stddev, double eta)
{
    if (stddev == 0.0) {
        return 0.0;
    }
    return std::pow(stddev, eta) * std::exp2(0.5 * eta) * std::tgamma(0.5 * (eta + 1.0))
           / std::sqrt(std::numbers::pi);
}

// Signed value sign * 2^log.
struct LogValue
{
    double sign = 1.0;
    double log = -kInf;
};

LogValue log_value_of(double x)
{
    return {x < 0.0 ? -1.0 : 1.0, x == 0.0 ? -kInf : std::log2(std::abs(x))};
}

LogValue log_add(LogValue x, LogValue y)
{
    if (y.log == -kInf) {
        return x;
    }
    if (x.log == -kInf) {
        return y;
    }
    double const m = std::max(x.log, y.log);
    double const v = x.sign * std::exp2(x.log - m) + y.sign * std::exp2(y.log - m);
    if (v == 0.0) {
        return {1.0, -kInf};
    }
    return {v < 0.0 ? -1.0 : 1.0, m + std::log2(std::abs(v))};
}

LogValue log_mul(LogValue x, LogValue y)
{
    return {x.sign * y.sign, x.log + y.log};
}

}  // namespace

void SystemSpec::validate() const
{
    if (!std::isfinite(a) || std::abs(a) < 1.0) {
        throw InvalidArgument("open-loop gain must satisfy |a| >= 1");
    }
    if (!std::isfinite(x0) || x0 == 0.0) {
        throw InvalidArgument("initial state must be finite and nonzero");
    }
    if (!(process_noise_std >= 0.0) || !(obs_noise_std >= 0.0)) {
        throw InvalidArgument("noise standard deviations must be nonnegative");
    }
}

StrategySpec StrategySpec::linear(double d)
{
    if (!std::isfinite(d)) {
        throw InvalidArgument("control gain must be finite");
    }
    return {Kind::LinearMemoryless, d, 0.0, 0.0};
}

StrategySpec StrategySpec::zero()
{
    return {Kind::ZeroControl, 0.0, 0.0, 0.0};
}

StrategySpec StrategySpec::random_gain(double low, double high)
{
    if (!std::isfinite(low) || !std::isfinite(high) || low > high) {
        throw InvalidArgument("random gain range must be finite with low <= high");
    }
    return {Kind::RandomGain, 0.0, low, high};
}

std::string StrategySpec::name() const
{
    switch (kind) {
        case Kind::LinearMemoryless:
            return "linear";
        case Kind::ZeroControl:
            return "zero";
        case Kind::RandomGain:
            break;
    }
    return "random-gain";
}

double fitted_slope(std::span<double const> values, std::size_t first, std::size_t last)
{
    if (last <= first || last >= values.size()) {
        throw InvalidArgument("slope window must hold at least two points");
    }
    for (std::size_t i = first; i <= last; ++i) {
        if (!std::isfinite(values[i])) {
            return values[i] == -kInf ? -kInf : (values[i] == kInf ? kInf : values[i]);
        }
    }
    double const n = static_cast<double>(last - first + 1);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        mx += static_cast<double>(i);
        my += values[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        double const dx = static_cast<double>(i) - mx;
        sxy += dx * (values[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

SimulationReport simulate(SystemSpec const& spec, StrategySpec const& strategy, SimulationParams const& params)
{
    spec.validate();
    validate_params(params);

    auto const steps = static_cast<std::size_t>(params.horizon) + 1;
    int const block_paths = std::max(kMinBlockPaths, (params.paths + kMaxBlocks - 1) / kMaxBlocks);
    int const n_blocks = (params.paths + block_paths - 1) / block_paths;
    auto const log_thresholds = log_thresholds_of(params);

    std::vector<BlockStats> blocks(static_cast<std::size_t>(n_blocks),
                                   BlockStats(steps, params.etas.size(), params.thresholds.size()));

#pragma omp parallel for schedule(dynamic, 1)
    for (int b = 0; b < n_blocks; ++b) {
        int const begin = b * block_paths;
        int const end = std::min(params.paths, begin + block_paths);
        for (int p = begin; p < end; ++p) {
            accumulate_path(blocks[static_cast<std::size_t>(b)], spec, strategy, params, log_thresholds,
                            static_cast<std::uint64_t>(p));
        }
    }

    // Pairwise tree over block indices: the summation order is fixed by
    // (paths, horizon) alone.
    for (int stride = 1; stride < n_blocks; stride *= 2) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n_blocks - stride; i += 2 * stride) {
            blocks[static_cast<std::size_t>(i)].merge(blocks[static_cast<std::size_t>(i + stride)]);
        }
    }
    return finalize(blocks.front(), spec, params);
}

namespace reference {

SimulationReport simulate(SystemSpec const& spec, StrategySpec const& strategy, SimulationParams const& params)
{
    spec.validate();
    validate_params(params);
    auto const steps = static_cast<std::size_t>(params.horizon) + 1;
    auto const log_thresholds = log_thresholds_of(params);
    BlockStats stats(steps, params.etas.size(), params.thresholds.size());
    for (int p = 0; p < params.paths; ++p) {
        accumulate_path(stats, spec, strategy, params, log_thresholds, static_cast<std::uint64_t>(p));
    }
    return finalize(stats, spec, params);
}

}  // namespace reference

std::string to_string(Verdict v)
{
    switch (v) {
        case Verdict::Stable:
            return "stable";
        case Verdict::Marginal:
            return "marginal";
        case Verdict::Unstable:
            break;
    }
    return "unstable";
}

Verdict classify_slope(double slope)
{
    if (slope < -kVerdictDeadBand) {
        return Verdict::Stable;
    }
    if (slope > kVerdictDeadBand) {
        return Verdict::Unstable;
    }
    return Verdict::Marginal;
}

ScanResult threshold_scan(ActuationDistribution const& dist,
                          CapacitySense const& sense,
                          std::span<double const> a_grid,
                          SimulationParams params,
                          CapacityQuery query)
{
    if (sense.kind == CapacitySense::Kind::ZeroError) {
        throw InvalidArgument("threshold scan supports the Shannon and eta senses");
    }
    ScanResult out;
    out.sense = sense;
    auto const cap = capacity(dist, sense, query);
    out.capacity_bits = cap.value_bits;
    if (cap.optimal_d) {
        out.d_star = *cap.optimal_d;
    } else {
        // Infinite Shannon capacity from an atom: aim at the heaviest nonzero atom.
        Atom best{0.0, 0.0};
        for (auto const& atom : dist.support().atoms) {
            if (atom.location != 0.0 && atom.mass > best.mass) {
                best = atom;
            }
        }
        out.d_star = best.location != 0.0 ? -1.0 / best.location : 0.0;
    }

    bool const moment_sense = sense.kind == CapacitySense::Kind::Eta;
    params.etas = moment_sense ? std::vector<double>{sense.eta} : std::vector<double>{};

    for (double a : a_grid) {
        if (!(a >= 1.0)) {
            throw InvalidArgument("threshold scan needs a >= 1");
        }
        SystemSpec const spec{a, dist, 1.0, 0.0, 0.0};
        auto const report = simulate(spec, StrategySpec::linear(out.d_star), params);
        double const slope = moment_sense ? report.moment_slope_bits.front() : report.growth_slope_bits;
        out.points.push_back({a, std::log2(a), slope, classify_slope(slope)});
    }

    for (std::size_t i = 0; i + 1 < out.points.size(); ++i) {
        auto const& p = out.points[i];
        auto const& q = out.points[i + 1];
        if (std::isfinite(p.slope) && std::isfinite(q.slope) && p.slope < 0.0 && q.slope >= 0.0) {
            out.critical_log2_a = p.log2_a + (0.0 - p.slope) * (q.log2_a - p.log2_a) / (q.slope - p.slope);
            break;
        }
    }
    return out;
}

ConverseResult strong_converse_experiment(ActuationDistribution const& dist,
                                          double a,
                                          std::span<double const> thresholds,
                                          SimulationParams params)
{
    if (!dist.support().atoms.empty()) {
        throw InvalidArgument("strong converse experiment needs a law with a bounded density (no atoms)");
    }
    ConverseResult out;
    out.a = a;
    out.thresholds.assign(thresholds.begin(), thresholds.end());
    auto const cap = shannon_capacity(dist);
    out.shannon_capacity_bits = cap.value_bits;
    double const d_star = cap.optimal_d.value_or(0.0);

    params.thresholds = out.thresholds;
    SystemSpec const spec{a, dist, 1.0, 0.0, 0.0};
    StrategySpec const strategies[] = {
        StrategySpec::linear(d_star),
        StrategySpec::zero(),
        StrategySpec::random_gain(std::min(2.0 * d_star, 0.0), std::max(2.0 * d_star, 0.0)),
    };
    for (auto const& strategy : strategies) {
        auto report = simulate(spec, strategy, params);
        ConverseTrace trace{strategy, std::move(report.fraction_above), {}};
        for (auto const& f : trace.fraction_above) {
            trace.final_fraction.push_back(f.back());
        }
        out.traces.push_back(std::move(trace));
    }
    return out;
}

namespace {

double gain_abs_moment(ActuationDistribution const& dist, double d, double eta)
{
    double const pole_list[] = {d != 0.0 ? -1.0 / d : 0.0};
    std::span<double const> poles = d != 0.0 ? std::span<double const>(pole_list) : std::span<double const>{};
    return expect(dist, [=](double b) { return std::pow(std::abs(1.0 + b * d), eta); }, poles);
}

}  // namespace

double moment_contraction(SystemSpec const& spec, double d, double eta)
{
    return std::abs(spec.a) * std::pow(gain_abs_moment(spec.dist, d, eta), 1.0 / eta);
}

double moment_ceiling(SystemSpec const& spec, double d, double eta)
{
    auto const& dist = spec.dist;
    double const gain_moment = gain_abs_moment(dist, d, eta);
    double const zero[] = {0.0};
    double const b_moment = expect(dist, [=](double b) { return std::pow(std::abs(b), eta); }, zero);
    double const v_moment = gaussian_abs_moment(spec.obs_noise_std, eta);
    double const w_moment = gaussian_abs_moment(spec.process_noise_std, eta);
    double const abs_a = std::abs(spec.a);

    if (eta >= 1.0) {
        // Minkowski: ||X'|| <= rho ||X|| + c.
        double const rho = abs_a * std::pow(gain_moment, 1.0 / eta);
        double const c = abs_a * std::abs(d) * std::pow(b_moment * v_moment, 1.0 / eta) + std::pow(w_moment, 1.0 / eta);
        if (rho >= 1.0) {
            return kInf;
        }
        return std::pow(std::max(std::abs(spec.x0), c / (1.0 - rho)), eta);
    }
    // Subadditivity of |.|^eta for eta < 1.
    double const r = std::pow(abs_a, eta) * gain_moment;
    double const c = std::pow(abs_a * std::abs(d), eta) * b_moment * v_moment + w_moment;
    if (r >= 1.0) {
        return kInf;
    }
    return std::max(std::pow(std::abs(spec.x0), eta), c / (1.0 - r));
}

AdditiveNoiseVerdict additive_noise_check(SystemSpec const& spec, double d_star, double eta, SimulationParams params)
{
    params.etas = {eta};
    AdditiveNoiseVerdict out;
    out.report = simulate(spec, StrategySpec::linear(d_star), params);
    auto const& moment = out.report.log2_moment.front();
    std::size_t const last = moment.size() - 1;
    std::size_t const first = std::min(last - 1, (3 * last) / 4);
    out.slope_bits = fitted_slope(moment, first, last) / eta;
    out.sup_moment = std::exp2(*std::max_element(moment.begin(), moment.end()));
    out.ceiling = moment_ceiling(spec, d_star, eta) / std::pow(std::abs(spec.x0), eta);
    out.contraction = moment_contraction(spec, d_star, eta);
    out.overflow_paths = out.report.overflow_paths;
    out.bounded = out.overflow_paths == 0 && std::abs(out.slope_bits) <= kVerdictDeadBand
                  && std::isfinite(out.ceiling) && out.sup_moment <= out.ceiling;
    // Rare large paths carry the moment, so the sample slope can miss the growth.
    out.diverges = out.contraction > 1.0 || out.overflow_paths > 0 || out.slope_bits > kVerdictDeadBand;
    return out;
}

double scaling_equivalence_check(ActuationDistribution const& dist, double a, double d, int horizon, std::uint64_t seed)
{
    if (horizon < 1 || !std::isfinite(a) || a == 0.0) {
        throw InvalidArgument("scaling check needs horizon >= 1 and finite nonzero a");
    }
    RngStream rng(seed, 0);
    LogValue const gain_a = log_value_of(a);
    LogValue const gain_d = log_value_of(d);

    LogValue x{1.0, 0.0};    // S, X[0] = 1
    LogValue xa = x;         // S_a
    double worst = 0.0;
    for (int k = 0; k < horizon; ++k) {
        LogValue const b = log_value_of(sample(dist, rng));
        LogValue const u = log_mul(gain_d, x);
        // In S_a the feedback d X_a[k] equals a^k U[k].
        LogValue const ua = log_mul(gain_d, xa);

        x = log_add(x, log_mul(b, u));
        xa = log_mul(gain_a, log_add(xa, log_mul(b, ua)));

        // Reference a^{k+1} X[k+1], built by the same repeated product.
        LogValue target = x;
        for (int j = 0; j <= k; ++j) {
            target = log_mul(gain_a, target);
        }
        if (target.log == -kInf || xa.log == -kInf) {
            if (target.log != xa.log) {
                return kInf;
            }
            continue;
        }
        double const ratio = target.sign * xa.sign * std::exp2(xa.log - target.log);
        worst = std::max(worst, std::abs(ratio - 1.0));
    }
    return worst;
}

}  // namespace ctlcap
