#include "ctlcap/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "ctlcap/error.hpp"
#include "ctlcap/report_io.hpp"

namespace ctlcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template<class... Ts>
struct Overloaded : Ts...
{
    using Ts::operator()...;
};
template<class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double normal_pdf(double z)
{
    if (!std::isfinite(z)) {
        return 0.0;
    }
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Upper tail Q(z) = P(N > z).
double normal_upper(double z)
{
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

// P(alpha < N < beta), evaluated on the side that avoids cancellation.
double normal_mass(double alpha, double beta)
{
    if (alpha >= 0.0) {
        return normal_upper(alpha) - normal_upper(beta);
    }
    if (beta <= 0.0) {
        return normal_upper(-beta) - normal_upper(-alpha);
    }
    return 1.0 - normal_upper(-alpha) - normal_upper(beta);
}

// z * pdf(z) with the infinite limits mapped to zero.
double z_pdf(double z)
{
    return std::isfinite(z) ? z * normal_pdf(z) : 0.0;
}

SupportInfo make_support(double lower, double upper, std::vector<Atom> atoms)
{
    std::sort(atoms.begin(), atoms.end(),
              [](Atom const& x, Atom const& y) { return x.location < y.location; });
    std::vector<Atom> merged;
    for (auto const& atom : atoms) {
        if (atom.mass <= 0.0) {
            continue;
        }
        if (!merged.empty() && merged.back().location == atom.location) {
            merged.back().mass += atom.mass;
        } else {
            merged.push_back(atom);
        }
    }
    SupportInfo info{lower, upper, std::move(merged), lower <= 0.0 && 0.0 <= upper, false};
    info.has_nonzero_atom = std::any_of(info.atoms.begin(), info.atoms.end(),
                                        [](Atom const& a) { return a.location != 0.0; });
    return info;
}

SupportInfo compute_support(ActuationDistribution::Kind const& kind)
{
    return std::visit(
        Overloaded{
            [](Uniform const& u) { return make_support(u.lower, u.upper, {}); },
            [](Gaussian const&) { return make_support(-kInf, kInf, {}); },
            [](TruncatedGaussian const& t) { return make_support(t.lower, t.upper, {}); },
            [](ScaledBernoulli const& s) {
                std::vector<Atom> atoms;
                if (s.p < 1.0) {
                    atoms.push_back({0.0, 1.0 - s.p});
                }
                if (s.p > 0.0) {
                    atoms.push_back({s.beta, s.p});
                }
                double lo = s.p < 1.0 ? std::min(0.0, s.beta) : s.beta;
                double hi = s.p < 1.0 ? std::max(0.0, s.beta) : s.beta;
                if (s.p == 0.0) {
                    lo = hi = 0.0;
                }
                return make_support(lo, hi, std::move(atoms));
            },
            [](Empirical const& e) {
                double const mass = 1.0 / static_cast<double>(e.samples.size());
                std::vector<Atom> atoms;
                atoms.reserve(e.samples.size());
                for (double x : e.samples) {
                    atoms.push_back({x, mass});
                }
                return make_support(e.samples.front(), e.samples.back(), std::move(atoms));
            },
            [](Mixture const& m) {
                double lo = kInf;
                double hi = -kInf;
                std::vector<Atom> atoms;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    auto const& s = m.components[i]->support();
                    lo = std::min(lo, s.lower);
                    hi = std::max(hi, s.upper);
                    for (auto const& a : s.atoms) {
                        atoms.push_back({a.location, m.weights[i] * a.mass});
                    }
                }
                return make_support(lo, hi, std::move(atoms));
            },
        },
        kind);
}

void require(bool condition, char const* message)
{
    if (!condition) {
        throw InvalidArgument(message);
    }
}

}  // namespace

bool SupportInfo::bounded() const noexcept
{
    return std::isfinite(lower) && std::isfinite(upper);
}

ActuationDistribution::ActuationDistribution(Kind kind)
    : kind_(std::move(kind)), support_(compute_support(kind_))
{
}

ActuationDistribution ActuationDistribution::uniform(double lower, double upper)
{
    require(std::isfinite(lower) && std::isfinite(upper) && lower < upper,
            "uniform requires finite b1 < b2");
    return ActuationDistribution(Uniform{lower, upper});
}

ActuationDistribution ActuationDistribution::gaussian(double mean, double stddev)
{
    require(std::isfinite(mean) && std::isfinite(stddev) && stddev > 0.0,
            "gaussian requires finite mean and sigma > 0");
    return ActuationDistribution(Gaussian{mean, stddev});
}

ActuationDistribution ActuationDistribution::scaled_bernoulli(double beta, double p)
{
    require(std::isfinite(beta) && beta != 0.0, "scaled bernoulli requires beta != 0");
    require(p >= 0.0 && p <= 1.0, "scaled bernoulli requires p in [0, 1]");
    return ActuationDistribution(ScaledBernoulli{beta, p});
}

ActuationDistribution ActuationDistribution::truncated_gaussian(double mean,
                                                                double stddev,
                                                                double lower,
                                                                double upper)
{
    require(std::isfinite(mean) && stddev > 0.0 && lower < upper,
            "truncated gaussian requires sigma > 0 and lower < upper");
    require(normal_mass((lower - mean) / stddev, (upper - mean) / stddev) > 0.0,
            "truncated gaussian interval has zero mass");
    return ActuationDistribution(TruncatedGaussian{mean, stddev, lower, upper});
}

ActuationDistribution ActuationDistribution::empirical(std::vector<double> samples)
{
    require(!samples.empty(), "empirical distribution requires at least one sample");
    require(std::all_of(samples.begin(), samples.end(), [](double x) { return std::isfinite(x); }),
            "empirical samples must be finite");
    std::sort(samples.begin(), samples.end());
    return ActuationDistribution(Empirical{std::move(samples)});
}

ActuationDistribution ActuationDistribution::point_mass(double location)
{
    return empirical({location});
}

ActuationDistribution ActuationDistribution::mixture(
    std::vector<std::pair<double, ActuationDistribution>> parts)
{
    require(!parts.empty(), "mixture requires at least one component");
    double total = 0.0;
    Mixture m;
    for (auto& [w, dist] : parts) {
        require(w >= 0.0, "mixture weights must be nonnegative");
        total += w;
        if (w > 0.0) {
            m.weights.push_back(w);
            m.components.push_back(std::make_shared<ActuationDistribution const>(std::move(dist)));
        }
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
    return ActuationDistribution(std::move(m));
}

std::pair<double, double> ActuationDistribution::effective_range() const
{
    return std::visit(
        Overloaded{
            [](Uniform const& u) { return std::pair{u.lower, u.upper}; },
            [](Gaussian const& g) {
                return std::pair{g.mean - kGaussianTailSigmas * g.stddev,
                                 g.mean + kGaussianTailSigmas * g.stddev};
            },
            [](TruncatedGaussian const& t) {
                return std::pair{std::max(t.lower, t.mean - kGaussianTailSigmas * t.stddev),
                                 std::min(t.upper, t.mean + kGaussianTailSigmas * t.stddev)};
            },
            [this](ScaledBernoulli const&) { return std::pair{support_.lower, support_.upper}; },
            [](Empirical const& e) { return std::pair{e.samples.front(), e.samples.back()}; },
            [](Mixture const& m) {
                double lo = kInf;
                double hi = -kInf;
                for (auto const& c : m.components) {
                    auto const [l, h] = c->effective_range();
                    lo = std::min(lo, l);
                    hi = std::max(hi, h);
                }
                return std::pair{lo, hi};
            },
        },
        kind_);
}

ActuationDistribution ActuationDistribution::scaled(double c) const
{
    require(std::isfinite(c) && c != 0.0, "scale factor must be finite and nonzero");
    return std::visit(
        Overloaded{
            [c](Uniform const& u) {
                return uniform(std::min(c * u.lower, c * u.upper), std::max(c * u.lower, c * u.upper));
            },
            [c](Gaussian const& g) { return gaussian(c * g.mean, std::abs(c) * g.stddev); },
            [c](TruncatedGaussian const& t) {
                return truncated_gaussian(c * t.mean, std::abs(c) * t.stddev,
                                          std::min(c * t.lower, c * t.upper),
                                          std::max(c * t.lower, c * t.upper));
            },
            [c](ScaledBernoulli const& s) { return scaled_bernoulli(c * s.beta, s.p); },
            [c](Empirical const& e) {
                std::vector<double> xs = e.samples;
                for (double& x : xs) {
                    x *= c;
                }
                return empirical(std::move(xs));
            },
            [c](Mixture const& m) {
                std::vector<std::pair<double, ActuationDistribution>> parts;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    parts.emplace_back(m.weights[i], m.components[i]->scaled(c));
                }
                return mixture(std::move(parts));
            },
        },
        kind_);
}

std::string ActuationDistribution::describe() const
{
    return std::visit(
        Overloaded{
            [](Uniform const& u) {
                return "uniform:" + format_number(u.lower) + "," + format_number(u.upper);
            },
            [](Gaussian const& g) {
                return "gaussian:" + format_number(g.mean) + "," + format_number(g.stddev);
            },
            [](TruncatedGaussian const& t) {
                return "truncated-gaussian:" + format_number(t.mean) + "," + format_number(t.stddev)
                       + "," + format_number(t.lower) + "," + format_number(t.upper);
            },
            [](ScaledBernoulli const& s) {
                return "erasure:" + format_number(s.beta) + "," + format_number(s.p);
            },
            [](Empirical const& e) {
                return "empirical:" + std::to_string(e.samples.size()) + " samples";
            },
            [](Mixture const& m) {
                std::string out = "mixture:";
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    if (i > 0) {
                        out += "|";
                    }
                    out += format_number(m.weights[i]) + "*" + m.components[i]->describe();
                }
                return out;
            },
        },
        kind_);
}

SupportInfo const& support(ActuationDistribution const& dist)
{
    return dist.support();
}

Moments moments(ActuationDistribution const& dist)
{
    auto const [mean, variance] = std::visit(
        Overloaded{
            [](Uniform const& u) {
                double const w = u.upper - u.lower;
                return std::pair{0.5 * (u.lower + u.upper), w * w / 12.0};
            },
            [](Gaussian const& g) { return std::pair{g.mean, g.stddev * g.stddev}; },
            [](TruncatedGaussian const& t) {
                double const alpha = (t.lower - t.mean) / t.stddev;
                double const beta = (t.upper - t.mean) / t.stddev;
                double const z = normal_mass(alpha, beta);
                double const shift = (normal_pdf(alpha) - normal_pdf(beta)) / z;
                double const spread = (z_pdf(alpha) - z_pdf(beta)) / z;
                double const var = t.stddev * t.stddev * (1.0 + spread - shift * shift);
                return std::pair{t.mean + t.stddev * shift, var};
            },
            [](ScaledBernoulli const& s) {
                return std::pair{s.beta * s.p, s.beta * s.beta * s.p * (1.0 - s.p)};
            },
            [](Empirical const& e) {
                double const n = static_cast<double>(e.samples.size());
                double m = 0.0;
                for (double x : e.samples) {
                    m += x;
                }
                m /= n;
                double v = 0.0;
                for (double x : e.samples) {
                    v += (x - m) * (x - m);
                }
                return std::pair{m, v / n};
            },
            [](Mixture const& mix) {
                double m = 0.0;
                double second = 0.0;
                for (std::size_t i = 0; i < mix.components.size(); ++i) {
                    auto const c = moments(*mix.components[i]);
                    m += mix.weights[i] * c.mean;
                    second += mix.weights[i] * c.second_moment;
                }
                return std::pair{m, std::max(0.0, second - m * m)};
            },
        },
        dist.kind());
    return {mean, variance, variance + mean * mean};
}

double sample(ActuationDistribution const& dist, RngStream& rng)
{
    return std::visit(
        Overloaded{
            [&](Uniform const& u) { return u.lower + (u.upper - u.lower) * rng.uniform(); },
            [&](Gaussian const& g) { return g.mean + g.stddev * rng.normal(); },
            [&](TruncatedGaussian const& t) {
                double const alpha = (t.lower - t.mean) / t.stddev;
                double const beta = (t.upper - t.mean) / t.stddev;
                double const u = rng.uniform_open();
                double z;
                // Invert on whichever tail keeps the probabilities away from 1.
                if (alpha >= 0.0) {
                    double const q = normal_upper(alpha) - u * normal_mass(alpha, beta);
                    z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
                } else if (beta <= 0.0) {
                    double const q = normal_upper(-beta) + u * normal_mass(alpha, beta);
                    z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
                } else {
                    double const p = normal_upper(-alpha) + u * normal_mass(alpha, beta);
                    z = -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
                }
                return t.mean + t.stddev * std::clamp(z, alpha, beta);
            },
            [&](ScaledBernoulli const& s) { return rng.uniform() < s.p ? s.beta : 0.0; },
            [&](Empirical const& e) {
                auto idx = static_cast<std::size_t>(rng.uniform() * static_cast<double>(e.samples.size()));
                return e.samples[std::min(idx, e.samples.size() - 1)];
            },
            [&](Mixture const& m) {
                double const u = rng.uniform();
                double acc = 0.0;
                std::size_t pick = m.components.size() - 1;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    acc += m.weights[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
                return sample(*m.components[pick], rng);
            },
        },
        dist.kind());
}

double expect(ActuationDistribution const& dist,
              std::function<double(double)> const& integrand,
              std::span<double const> singularities,
              QuadratureOptions const& options)
{
    return std::visit(
        Overloaded{
            [&](Uniform const& u) {
                double const scale = 1.0 / (u.upper - u.lower);
                return scale * integrate(integrand, u.lower, u.upper, singularities, options).value;
            },
            [&](Gaussian const& g) {
                double const norm = 1.0 / (g.stddev * std::sqrt(2.0 * std::numbers::pi));
                auto weighted = [&](double b) {
                    double const z = (b - g.mean) / g.stddev;
                    return integrand(b) * norm * std::exp(-0.5 * z * z);
                };
                auto const [lo, hi] = dist.effective_range();
                return integrate(weighted, lo, hi, singularities, options).value;
            },
            [&](TruncatedGaussian const& t) {
                double const alpha = (t.lower - t.mean) / t.stddev;
                double const beta = (t.upper - t.mean) / t.stddev;
                double const norm =
                    1.0 / (t.stddev * std::sqrt(2.0 * std::numbers::pi) * normal_mass(alpha, beta));
                auto weighted = [&](double b) {
                    double const z = (b - t.mean) / t.stddev;
                    return integrand(b) * norm * std::exp(-0.5 * z * z);
                };
                auto const [lo, hi] = dist.effective_range();
                return integrate(weighted, lo, hi, singularities, options).value;
            },
            [&](ScaledBernoulli const& s) {
                double total = 0.0;
                if (s.p < 1.0) {
                    total += (1.0 - s.p) * integrand(0.0);
                }
                if (s.p > 0.0) {
                    total += s.p * integrand(s.beta);
                }
                return total;
            },
            [&](Empirical const&) {
                double total = 0.0;
                for (auto const& atom : dist.support().atoms) {
                    total += atom.mass * integrand(atom.location);
                }
                return total;
            },
            [&](Mixture const& m) {
                double total = 0.0;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    total += m.weights[i] * expect(*m.components[i], integrand, singularities, options);
                }
                return total;
            },
        },
        dist.kind());
}

Restriction restrict_to_cell(ActuationDistribution const& dist, Cell const& cell)
{
    auto empty = [&]() -> EmptyCell {
        return EmptyCell("cell [" + format_number(cell.lower) + ", " + format_number(cell.upper)
                         + ") has zero probability under " + dist.describe());
    };
    auto restrict_atoms = [&](std::vector<Atom> const& atoms) {
        double prob = 0.0;
        std::vector<std::pair<double, double>> kept;
        for (auto const& a : atoms) {
            if (cell.contains(a.location)) {
                prob += a.mass;
                kept.emplace_back(a.location, a.mass);
            }
        }
        return std::pair{prob, kept};
    };

    return std::visit(
        Overloaded{
            [&](Uniform const& u) {
                double const lo = std::max(u.lower, cell.lower);
                double const hi = std::min(u.upper, cell.upper);
                if (!(hi > lo)) {
                    throw empty();
                }
                double const prob = (hi - lo) / (u.upper - u.lower);
                if (lo == u.lower && hi == u.upper) {
                    return Restriction{1.0, dist};
                }
                return Restriction{prob, ActuationDistribution::uniform(lo, hi)};
            },
            [&](Gaussian const& g) {
                double const alpha = (cell.lower - g.mean) / g.stddev;
                double const beta = (cell.upper - g.mean) / g.stddev;
                double const prob = cell.upper > cell.lower ? normal_mass(alpha, beta) : 0.0;
                if (!(prob > 0.0)) {
                    throw empty();
                }
                if (!std::isfinite(cell.lower) && !std::isfinite(cell.upper)) {
                    return Restriction{1.0, dist};
                }
                return Restriction{prob, ActuationDistribution::truncated_gaussian(
                                             g.mean, g.stddev, cell.lower, cell.upper)};
            },
            [&](TruncatedGaussian const& t) {
                double const lo = std::max(t.lower, cell.lower);
                double const hi = std::min(t.upper, cell.upper);
                double const whole = normal_mass((t.lower - t.mean) / t.stddev, (t.upper - t.mean) / t.stddev);
                double const part = hi > lo ? normal_mass((lo - t.mean) / t.stddev, (hi - t.mean) / t.stddev) : 0.0;
                if (!(part > 0.0)) {
                    throw empty();
                }
                if (lo == t.lower && hi == t.upper) {
                    return Restriction{1.0, dist};
                }
                return Restriction{part / whole,
                                   ActuationDistribution::truncated_gaussian(t.mean, t.stddev, lo, hi)};
            },
            [&](ScaledBernoulli const&) {
                auto const [prob, kept] = restrict_atoms(dist.support().atoms);
                if (!(prob > 0.0)) {
                    throw empty();
                }
                if (kept.size() == dist.support().atoms.size()) {
                    return Restriction{prob, dist};
                }
                return Restriction{prob, ActuationDistribution::point_mass(kept.front().first)};
            },
            [&](Empirical const& e) {
                std::vector<double> xs;
                for (double x : e.samples) {
                    if (cell.contains(x)) {
                        xs.push_back(x);
                    }
                }
                if (xs.empty()) {
                    throw empty();
                }
                double const prob = static_cast<double>(xs.size()) / static_cast<double>(e.samples.size());
                return Restriction{prob, ActuationDistribution::empirical(std::move(xs))};
            },
            [&](Mixture const& m) {
                std::vector<std::pair<double, ActuationDistribution>> parts;
                double prob = 0.0;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    try {
                        auto r = restrict_to_cell(*m.components[i], cell);
                        double const w = m.weights[i] * r.probability;
                        prob += w;
                        parts.emplace_back(w, std::move(r.conditional));
                    } catch (EmptyCell const&) {
                    }
                }
                if (parts.empty() || !(prob > 0.0)) {
                    throw empty();
                }
                if (parts.size() == 1) {
                    return Restriction{prob, std::move(parts.front().second)};
                }
                double total = 0.0;
                for (auto& part : parts) {
                    part.first /= prob;
                    total += part.first;
                }
                // Renormalize against rounding so the mixture invariant holds.
                parts.back().first += 1.0 - total;
                return Restriction{prob, ActuationDistribution::mixture(std::move(parts))};
            },
        },
        dist.kind());
}

namespace {

double parse_number(std::string_view text, std::string_view context)
{
    while (!text.empty() && text.front() == ' ') {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    auto const* end = text.data() + text.size();
    auto const [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw ConfigError("cannot parse number '" + std::string(text) + "' in '" + std::string(context) + "'");
    }
    return value;
}

std::vector<double> parse_numbers(std::string_view text, std::string_view context)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (true) {
        auto const comma = text.find(',', start);
        out.push_back(parse_number(text.substr(start, comma - start), context));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<double> read_samples(std::string const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open empirical sample file '" + path + "'");
    }
    std::vector<double> xs;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        xs.push_back(parse_number(line, path));
    }
    return xs;
}

}  // namespace

ActuationDistribution parse_distribution(std::string_view spec)
{
    auto const colon = spec.find(':');
    if (colon == std::string_view::npos) {
        throw ConfigError("distribution spec '" + std::string(spec) + "' lacks a ':'");
    }
    auto const name = spec.substr(0, colon);
    auto const args = spec.substr(colon + 1);

    auto expect_count = [&](std::vector<double> const& v, std::size_t n) {
        if (v.size() != n) {
            throw ConfigError("distribution spec '" + std::string(spec) + "' expects "
                              + std::to_string(n) + " parameters");
        }
    };

    try {
        if (name == "uniform") {
            auto const v = parse_numbers(args, spec);
            expect_count(v, 2);
            return ActuationDistribution::uniform(v[0], v[1]);
        }
        if (name == "gaussian") {
            auto const v = parse_numbers(args, spec);
            expect_count(v, 2);
            return ActuationDistribution::gaussian(v[0], v[1]);
        }
        if (name == "erasure") {
            auto const v = parse_numbers(args, spec);
            expect_count(v, 2);
            return ActuationDistribution::scaled_bernoulli(v[0], v[1]);
        }
        if (name == "empirical") {
            if (args.empty() || args.front() != '@') {
                throw ConfigError("empirical spec must be 'empirical:@path.csv'");
            }
            return ActuationDistribution::empirical(read_samples(std::string(args.substr(1))));
        }
        if (name == "mixture") {
            std::vector<std::pair<double, ActuationDistribution>> parts;
            std::size_t start = 0;
            while (true) {
                auto const bar = args.find('|', start);
                auto const item = args.substr(start, bar - start);
                auto const star = item.find('*');
                if (star == std::string_view::npos) {
                    throw ConfigError("mixture component '" + std::string(item) + "' must be 'w*<spec>'");
                }
                parts.emplace_back(parse_number(item.substr(0, star), spec),
                                   parse_distribution(item.substr(star + 1)));
                if (bar == std::string_view::npos) {
                    break;
                }
                start = bar + 1;
            }
            return ActuationDistribution::mixture(std::move(parts));
        }
    } catch (InvalidArgument const& e) {
        throw ConfigError("invalid distribution '" + std::string(spec) + "': " + e.what());
    }
    throw ConfigError("unknown distribution family '" + std::string(name) + "'");
}

}  // namespace ctlcap
