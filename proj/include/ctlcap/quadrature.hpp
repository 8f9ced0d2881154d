#pragma once

#include <functional>
#include <span>

namespace ctlcap {

struct QuadratureOptions
{
    double rel_tol = 1e-9;
    double abs_tol = 1e-14;
    /// Estimated error (relative to max(1, |value|)) above which the integral
    /// is declared non-integrable once refinement is exhausted.
    double fail_tol = 1e-6;
    int max_subdivisions = 4000;
    /// Number of geometrically shrinking panels laid toward each singular point.
    int grading_levels = 56;
};

struct QuadratureResult
{
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    int panels = 0;
};

/// One 15-point Gauss-Kronrod panel with the QUADPACK error heuristic.
struct PanelEstimate
{
    double value;
    double error;
};
PanelEstimate gauss_kronrod15(std::function<double(double)> const& f, double a, double b);

/// Globally adaptive Gauss-Kronrod integration over [a, b].
///
/// `singular_points` are locations (inside or at the ends of [a, b]) where
/// the integrand may have an integrable log or power singularity. The range
/// is split at each of them, and every panel touching a singular point is
/// replaced by a geometric grading toward it, so that each sub-panel sees a
/// singularity at distance comparable to its own width. Points outside
/// [a, b] are ignored.
///
/// Throws NonIntegrable when the error target cannot be met.
QuadratureResult integrate(std::function<double(double)> const& f,
                           double a,
                           double b,
                           std::span<double const> singular_points = {},
                           QuadratureOptions const& options = {});

}  // namespace ctlcap
