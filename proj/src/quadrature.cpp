#include "ctlcap/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "ctlcap/error.hpp"

namespace ctlcap {
namespace {

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
constexpr double kNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Narrowest panel, relative to its magnitude, whose outermost Kronrod nodes
// stay distinct from its ends.
constexpr double kMinRelativeWidth = 1024.0 * kEps;

double min_width(double x, double y)
{
    return kMinRelativeWidth * std::max({std::abs(x), std::abs(y), std::numeric_limits<double>::min()});
}

struct Panel
{
    double a;
    double b;
    double value;
    double error;
    bool operator<(Panel const& other) const { return error < other.error; }
};

// Breakpoints of a geometric grading from `far` toward the singular end `near`.
void append_graded(std::vector<std::pair<double, double>>& panels,
                   double near,
                   double far,
                   int levels)
{
    double const length = far - near;
    double outer = far;
    for (int j = 1; j <= levels; ++j) {
        double const inner = near + std::ldexp(length, -j);
        if (std::abs(inner - near) <= min_width(near, inner)) {
            break;
        }
        panels.emplace_back(std::min(inner, outer), std::max(inner, outer));
        outer = inner;
    }
    if (outer != near) {
        panels.emplace_back(std::min(near, outer), std::max(near, outer));
    }
}

}  // namespace

PanelEstimate gauss_kronrod15(std::function<double(double)> const& f, double a, double b)
{
    double const center = 0.5 * (a + b);
    double const half = 0.5 * (b - a);

    double fv1[7];
    double fv2[7];
    double const fc = f(center);
    double resk = fc * kKronrodWeights[7];
    double resg = fc * kGaussWeights[3];
    double resabs = std::abs(resk);

    for (int j = 0; j < 7; ++j) {
        double const dx = half * kNodes[j];
        double const f1 = f(center - dx);
        double const f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += kKronrodWeights[j] * (f1 + f2);
        resabs += kKronrodWeights[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) {
            resg += kGaussWeights[j / 2] * (f1 + f2);
        }
    }

    double const mean = 0.5 * resk;
    double resasc = kKronrodWeights[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) {
        resasc += kKronrodWeights[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    }

    double const h = std::abs(half);
    double value = resk * half;
    resabs *= h;
    resasc *= h;
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
        err = std::max(50.0 * kEps * resabs, err);
    }
    return {value, err};
}

QuadratureResult integrate(std::function<double(double)> const& f,
                           double a,
                           double b,
                           std::span<double const> singular_points,
                           QuadratureOptions const& options)
{
    QuadratureResult result;
    if (a == b) {
        return result;
    }
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }

    // Breakpoints with a flag marking singular ones.
    std::vector<std::pair<double, bool>> points{{a, false}, {b, false}};
    for (double s : singular_points) {
        if (!(s >= a && s <= b)) {
            continue;
        }
        if (s == a) {
            points.front().second = true;
        } else if (s == b) {
            points.back().second = true;
        } else {
            points.emplace_back(s, true);
        }
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [](auto const& x, auto const& y) { return x.first == y.first; }),
                 points.end());

    std::vector<std::pair<double, double>> initial;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        auto const [lo, lo_sing] = points[i];
        auto const [hi, hi_sing] = points[i + 1];
        if (lo_sing && hi_sing) {
            double const mid = 0.5 * (lo + hi);
            append_graded(initial, lo, mid, options.grading_levels);
            append_graded(initial, hi, mid, options.grading_levels);
        } else if (lo_sing) {
            append_graded(initial, lo, hi, options.grading_levels);
        } else if (hi_sing) {
            append_graded(initial, hi, lo, options.grading_levels);
        } else {
            initial.emplace_back(lo, hi);
        }
    }

    std::priority_queue<Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    // Panels too narrow to split further; their error is frozen.
    double frozen_err = 0.0;
    for (auto const& [lo, hi] : initial) {
        auto const est = gauss_kronrod15(f, lo, hi);
        result.evaluations += 15;
        heap.push({lo, hi, est.value, est.error});
        total += est.value;
        total_err += est.error;
    }

    int splits = 0;
    auto tolerance = [&] { return std::max(options.abs_tol, options.rel_tol * std::abs(total)); };
    while (total_err + frozen_err > tolerance() && splits < options.max_subdivisions
           && !heap.empty()) {
        Panel worst = heap.top();
        heap.pop();
        double const mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)
            || (worst.b - worst.a) <= 2.0 * min_width(worst.a, worst.b)) {
            frozen_err += worst.error;
            total_err -= worst.error;
            continue;
        }
        auto const left = gauss_kronrod15(f, worst.a, mid);
        auto const right = gauss_kronrod15(f, mid, worst.b);
        result.evaluations += 30;
        ++splits;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push({worst.a, mid, left.value, left.error});
        heap.push({mid, worst.b, right.value, right.error});
    }

    // Recompute the sum from scratch to shed accumulated cancellation.
    double sum = 0.0;
    double err = frozen_err;
    result.panels = static_cast<int>(heap.size());
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    result.value = sign * sum;
    result.error = err;

    if (!std::isfinite(sum) || err > options.fail_tol * std::max(1.0, std::abs(sum))) {
        throw NonIntegrable("quadrature failed to converge on [" + std::to_string(a) + ", "
                            + std::to_string(b) + "]: estimated error "
                            + std::to_string(err));
    }
    return result;
}

}  // namespace ctlcap
