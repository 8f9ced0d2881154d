#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctlcap/distributions.hpp"

namespace ctlcap {

/// Stability sense a capacity refers to.
struct CapacitySense
{
    enum class Kind { Shannon, ZeroError, Eta };

    Kind kind = Kind::Shannon;
    double eta = 0.0;

    static CapacitySense shannon() { return {Kind::Shannon, 0.0}; }
    static CapacitySense zero_error() { return {Kind::ZeroError, 0.0}; }
    static CapacitySense moment(double eta);

    std::string name() const;
};

struct CapacityQuery
{
    CapacitySense sense = CapacitySense::shannon();
    /// Half-width H of the d search interval; derived from the law when unset.
    std::optional<double> d_search_halfwidth;
    /// Odd, so that d = 0 is on the grid.
    int coarse_grid_points = 2001;
    double refine_tolerance = 1e-10;
    /// Times H is doubled when the argmax lands on the boundary.
    int max_bound_doublings = 3;
};

struct SolverDiagnostics
{
    int grid_evaluations = 0;
    int refinement_iterations = 0;
    double objective_at_optimum = 0.0;
    bool flat = false;
    bool search_bound_hit = false;
    double search_halfwidth = 0.0;
};

struct CapacityResult
{
    /// Bits per step; +infinity allowed.
    double value_bits = 0.0;
    std::optional<double> optimal_d;
    CapacitySense sense;
    SolverDiagnostics diagnostics;
};

/// Grid-placement hints for the optimizer.
struct SearchHints
{
    /// Where the closed-form optimizers concentrate: near 0 and near -1/mean.
    std::optional<double> focus;
    /// Extra points evaluated exactly, e.g. -1/atom for each nonzero atom.
    std::vector<double> exact;
};

struct Maximum
{
    double d = 0.0;
    double value = 0.0;
    SolverDiagnostics diagnostics;
};

/// E[-log2 |1 + B d|]; exactly 0 at d = 0 and +infinity when B has an atom at -1/d.
double shannon_objective(ActuationDistribution const& dist, double d);

/// -(1/eta) log2 E[|1 + B d|^eta].
double eta_objective(ActuationDistribution const& dist, double d, double eta);

/// Search half-width H = 100 max(1/|mean|, 1/max(|b1|, |b2|, sigma), 1), capped at 1e6.
double default_search_halfwidth(ActuationDistribution const& dist);

/// Coarse-grid abscissae used by maximize_over_d (sorted, contains 0).
std::vector<double> search_grid(double halfwidth, int points, SearchHints const& hints);

/// Global maximization over d in [-H, H]: coarse grid scan, then golden-section
/// refinement of the best bracket. Grid evaluation runs in parallel; ties are
/// resolved by grid index, so the answer does not depend on the thread count.
Maximum maximize_over_d(std::function<double(double)> const& objective,
                        CapacityQuery const& query,
                        SearchHints const& hints = {});

CapacityResult shannon_capacity(ActuationDistribution const& dist, CapacityQuery query = {});

/// Closed-form minimax over the support interval.
CapacityResult zero_error_capacity(ActuationDistribution const& dist);

CapacityResult eta_capacity(ActuationDistribution const& dist, double eta, CapacityQuery query = {});

/// 1/2 log2(1 + mean^2 / variance); +infinity for point masses.
CapacityResult second_moment_closed_form(ActuationDistribution const& dist);

CapacityResult capacity(ActuationDistribution const& dist, CapacitySense const& sense,
                        CapacityQuery query = {});

struct CurvePoint
{
    double eta;
    double value_bits;
    std::optional<double> optimal_d;
};

/// eta-th moment capacities along a strictly increasing grid; throws
/// InvalidArgument if the result is not nonincreasing within 1e-7.
std::vector<CurvePoint> capacity_curve(ActuationDistribution const& dist,
                                       std::span<double const> eta_grid,
                                       CapacityQuery query = {});

}  // namespace ctlcap
