#include "ctlcap/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include "ctlcap/error.hpp"

namespace ctlcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTie = 1e-12;
// Objectives with eta at or above this are accumulated in the log domain.
constexpr double kLogDomainEta = 8.0;

bool has_atom_at(SupportInfo const& s, double x)
{
    return std::any_of(s.atoms.begin(), s.atoms.end(),
                       [x](Atom const& a) { return a.location == x && a.mass > 0.0; });
}

// Single-atom laws have closed-form capacities in every sense.
std::optional<double> single_atom(ActuationDistribution const& dist)
{
    auto const& s = dist.support();
    if (s.atoms.size() == 1 && s.atoms.front().mass >= 1.0 - 1e-12 && s.lower == s.upper) {
        return s.atoms.front().location;
    }
    return std::nullopt;
}

// Runs the optimizer, doubling H while the argmax sits on the boundary.
Maximum maximize_with_retry(std::function<double(double)> const& objective,
                            CapacityQuery query,
                            ActuationDistribution const& dist)
{
    if (!query.d_search_halfwidth) {
        query.d_search_halfwidth = default_search_halfwidth(dist);
    }
    SearchHints hints;
    double const mean = moments(dist).mean;
    if (mean != 0.0) {
        hints.focus = -1.0 / mean;
    }
    for (auto const& atom : dist.support().atoms) {
        if (atom.location != 0.0 && atom.mass > 0.0) {
            hints.exact.push_back(-1.0 / atom.location);
        }
    }
    Maximum best = maximize_over_d(objective, query, hints);
    for (int i = 0; i < query.max_bound_doublings && best.diagnostics.search_bound_hit; ++i) {
        *query.d_search_halfwidth *= 2.0;
        best = maximize_over_d(objective, query, hints);
    }
    return best;
}

CapacityResult from_maximum(Maximum const& m, CapacitySense sense)
{
    CapacityResult r;
    r.sense = sense;
    r.value_bits = std::max(0.0, m.value);
    r.optimal_d = m.d;
    r.diagnostics = m.diagnostics;
    return r;
}

}  // namespace

CapacitySense CapacitySense::moment(double eta)
{
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidArgument("eta must be a finite positive number");
    }
    return {Kind::Eta, eta};
}

std::string CapacitySense::name() const
{
    switch (kind) {
        case Kind::Shannon:
            return "shannon";
        case Kind::ZeroError:
            return "zero-error";
        case Kind::Eta:
            break;
    }
    std::string s = std::to_string(eta);
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') {
        s.pop_back();
    }
    return "eta=" + s;
}

double shannon_objective(ActuationDistribution const& dist, double d)
{
    if (d == 0.0) {
        return 0.0;
    }
    double const pole = -1.0 / d;
    if (has_atom_at(dist.support(), pole)) {
        return kInf;
    }
    // |1 + b d| = |d| |b - pole| keeps relative precision next to the pole.
    double const log_d = std::log(std::abs(d));
    auto integrand = [=](double b) { return -(log_d + std::log(std::abs(b - pole))); };
    double const singular[] = {pole};
    return expect(dist, integrand, singular) / std::numbers::ln2;
}

double eta_objective(ActuationDistribution const& dist, double d, double eta)
{
    if (!(eta > 0.0)) {
        throw InvalidArgument("eta must be positive");
    }
    if (d == 0.0) {
        return 0.0;
    }
    double pole = -1.0 / d;
    for (auto const& atom : dist.support().atoms) {
        if (std::abs(atom.location - pole) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(pole)) {
            pole = atom.location;
        }
    }
    double const log_d = std::log(std::abs(d));
    double const singular[] = {pole};

    double log_mean;
    if (eta < kLogDomainEta) {
        auto integrand = [=](double b) { return std::pow(std::abs(d * (b - pole)), eta); };
        double const mean = expect(dist, integrand, singular);
        if (mean <= 0.0) {
            return kInf;
        }
        log_mean = std::log(mean);
    } else {
        // |1 + b d| is convex in b, so its maximum is at an end of the range.
        auto const [lo, hi] = dist.effective_range();
        double const peak = std::max(std::log(std::abs(1.0 + lo * d)), std::log(std::abs(1.0 + hi * d)));
        auto integrand = [=](double b) {
            return std::exp(eta * (log_d + std::log(std::abs(b - pole)) - peak));
        };
        double const scaled = expect(dist, integrand, singular);
        if (scaled <= 0.0) {
            return kInf;
        }
        log_mean = eta * peak + std::log(scaled);
    }
    return -log_mean / (eta * std::numbers::ln2);
}

double default_search_halfwidth(ActuationDistribution const& dist)
{
    auto const m = moments(dist);
    auto const& s = dist.support();
    double const spread = std::max({std::abs(s.lower), std::abs(s.upper), std::sqrt(m.variance)});
    double const inv_mean = m.mean != 0.0 ? 1.0 / std::abs(m.mean) : kInf;
    double const inv_spread = spread > 0.0 ? 1.0 / spread : kInf;
    double const h = 100.0 * std::max({inv_mean, inv_spread, 1.0});
    return std::min(h, 1e6);
}

std::vector<double> search_grid(double halfwidth, int points, SearchHints const& hints)
{
    if (points < 101 || points % 2 == 0) {
        throw InvalidArgument("coarse grid needs an odd number of points >= 101");
    }
    if (!(halfwidth > 0.0)) {
        throw InvalidArgument("search half-width must be positive");
    }
    int const per_side = (points - 1) / 2;
    bool const use_focus = hints.focus && std::abs(*hints.focus) > 0.0
                           && std::abs(*hints.focus) * 1.95 < halfwidth;
    int const cluster = use_focus ? 2 * (per_side / 4) : 0;
    int const geometric = (points - 1 - cluster) / 2;

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    grid.push_back(0.0);
    // |d| from H down to 1e-8 H, log-spaced on each side.
    for (int k = 0; k < geometric; ++k) {
        double const frac = geometric > 1 ? static_cast<double>(k) / (geometric - 1) : 0.0;
        double const mag = halfwidth * std::pow(1e-8, frac);
        grid.push_back(mag);
        grid.push_back(-mag);
    }
    // Relative offsets 1e-5 .. 0.95 on both sides of the focus.
    for (int k = 0; k < cluster / 2; ++k) {
        double const frac = cluster > 2 ? static_cast<double>(k) / (cluster / 2 - 1) : 0.0;
        double const t = 1e-5 * std::pow(0.95 / 1e-5, frac);
        grid.push_back(*hints.focus * (1.0 + t));
        grid.push_back(*hints.focus * (1.0 - t));
    }
    for (double x : hints.exact) {
        if (std::abs(x) <= halfwidth) {
            grid.push_back(x);
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

Maximum maximize_over_d(std::function<double(double)> const& objective,
                        CapacityQuery const& query,
                        SearchHints const& hints)
{
    double const halfwidth = query.d_search_halfwidth.value_or(100.0);
    auto const grid = search_grid(halfwidth, query.coarse_grid_points, hints);
    auto const n = static_cast<std::ptrdiff_t>(grid.size());
    std::vector<double> values(grid.size());
    std::vector<std::exception_ptr> failures(grid.size());

#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            values[i] = objective(grid[i]);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    }
    for (auto const& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }

    Maximum out;
    out.diagnostics.grid_evaluations = static_cast<int>(n);
    out.diagnostics.search_halfwidth = halfwidth;

    // An infinite objective (atom hit) wins outright; prefer the smallest |d|.
    std::ptrdiff_t inf_index = -1;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (values[i] == kInf && (inf_index < 0 || std::abs(grid[i]) < std::abs(grid[inf_index]))) {
            inf_index = i;
        }
    }
    if (inf_index >= 0) {
        out.d = grid[inf_index];
        out.value = kInf;
        out.diagnostics.objective_at_optimum = kInf;
        return out;
    }

    std::ptrdiff_t best = -1;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (std::isnan(values[i])) {
            continue;
        }
        if (best < 0 || values[i] > values[best] + kTie
            || (std::abs(values[i] - values[best]) <= kTie && std::abs(grid[i]) < std::abs(grid[best]))) {
            best = i;
        }
    }
    if (best < 0) {
        throw NonIntegrable("objective is undefined on the whole search grid");
    }
    double runner_up = -kInf;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (i != best && !std::isnan(values[i])) {
            runner_up = std::max(runner_up, values[i]);
        }
    }
    out.diagnostics.flat = values[best] - runner_up < kTie;
    out.diagnostics.search_bound_hit = best == 0 || best == n - 1;

    // Golden-section refinement on the bracket around the grid winner.
    double lo = grid[std::max<std::ptrdiff_t>(best - 1, 0)];
    double hi = grid[std::min<std::ptrdiff_t>(best + 1, n - 1)];
    double const inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    int iterations = 0;
    while (hi - lo > query.refine_tolerance && iterations < 200) {
        ++iterations;
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    double const x_ref = f1 >= f2 ? x1 : x2;
    double const f_ref = std::max(f1, f2);
    out.diagnostics.refinement_iterations = iterations;

    if (f_ref > values[best]) {
        out.d = x_ref;
        out.value = f_ref;
    } else {
        out.d = grid[best];
        out.value = values[best];
    }
    out.diagnostics.objective_at_optimum = out.value;
    return out;
}

CapacityResult shannon_capacity(ActuationDistribution const& dist, CapacityQuery query)
{
    query.sense = CapacitySense::shannon();
    if (dist.support().has_nonzero_atom) {
        CapacityResult r;
        r.sense = query.sense;
        r.value_bits = kInf;
        r.diagnostics.objective_at_optimum = kInf;
        return r;
    }
    if (single_atom(dist)) {
        CapacityResult r;
        r.sense = query.sense;
        r.optimal_d = 0.0;
        return r;
    }
    auto objective = [&dist](double d) { return shannon_objective(dist, d); };
    return from_maximum(maximize_with_retry(objective, query, dist), query.sense);
}

CapacityResult zero_error_capacity(ActuationDistribution const& dist)
{
    CapacityResult r;
    r.sense = CapacitySense::zero_error();
    auto const& s = dist.support();
    if (!s.bounded()) {
        r.value_bits = 0.0;
        return r;
    }
    if (s.contains_zero) {
        r.value_bits = 0.0;
        r.optimal_d = 0.0;
        return r;
    }
    double const sum = s.lower + s.upper;
    double const width = s.upper - s.lower;
    r.optimal_d = -2.0 / sum;
    r.value_bits = width > 0.0 ? std::log2(std::abs(sum) / width) : kInf;
    r.diagnostics.objective_at_optimum = r.value_bits;
    return r;
}

CapacityResult eta_capacity(ActuationDistribution const& dist, double eta, CapacityQuery query)
{
    query.sense = CapacitySense::moment(eta);
    if (auto const atom = single_atom(dist)) {
        CapacityResult r;
        r.sense = query.sense;
        r.value_bits = *atom != 0.0 ? kInf : 0.0;
        r.optimal_d = *atom != 0.0 ? -1.0 / *atom : 0.0;
        r.diagnostics.objective_at_optimum = r.value_bits;
        return r;
    }
    auto objective = [&dist, eta](double d) { return eta_objective(dist, d, eta); };
    return from_maximum(maximize_with_retry(objective, query, dist), query.sense);
}

CapacityResult second_moment_closed_form(ActuationDistribution const& dist)
{
    auto const m = moments(dist);
    CapacityResult r;
    r.sense = CapacitySense::moment(2.0);
    if (m.variance <= 0.0) {
        r.value_bits = m.mean != 0.0 ? kInf : 0.0;
        r.optimal_d = m.mean != 0.0 ? -1.0 / m.mean : 0.0;
    } else {
        r.value_bits = 0.5 * std::log2(1.0 + m.mean * m.mean / m.variance);
        r.optimal_d = -m.mean / m.second_moment;
    }
    r.diagnostics.objective_at_optimum = r.value_bits;
    return r;
}

CapacityResult capacity(ActuationDistribution const& dist, CapacitySense const& sense, CapacityQuery query)
{
    switch (sense.kind) {
        case CapacitySense::Kind::Shannon:
            return shannon_capacity(dist, query);
        case CapacitySense::Kind::ZeroError:
            return zero_error_capacity(dist);
        case CapacitySense::Kind::Eta:
            break;
    }
    return eta_capacity(dist, sense.eta, query);
}

std::vector<CurvePoint> capacity_curve(ActuationDistribution const& dist,
                                       std::span<double const> eta_grid,
                                       CapacityQuery query)
{
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
        if (!(eta_grid[i] > 0.0) || (i > 0 && !(eta_grid[i] > eta_grid[i - 1]))) {
            throw InvalidArgument("eta grid must be positive and strictly increasing");
        }
    }
    std::vector<CurvePoint> curve;
    curve.reserve(eta_grid.size());
    for (double eta : eta_grid) {
        auto const r = eta_capacity(dist, eta, query);
        curve.push_back({eta, r.value_bits, r.optimal_d});
    }
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].value_bits > curve[i - 1].value_bits + 1e-7) {
            throw Error("capacity curve increases between eta = " + std::to_string(curve[i - 1].eta)
                        + " and eta = " + std::to_string(curve[i].eta));
        }
    }
    return curve;
}

}  // namespace ctlcap
