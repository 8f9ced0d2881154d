#include "ctlcap/side_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ctlcap/error.hpp"

namespace ctlcap {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string cell_label(Cell const& cell)
{
    std::ostringstream os;
    os.precision(12);
    os << '[' << cell.lower << ',' << cell.upper << (cell.closed_upper ? ']' : ')');
    return os.str();
}

}  // namespace

SideInformationModel::SideInformationModel(std::vector<SideInfoCell> cells) : cells_(std::move(cells))
{
    if (cells_.empty()) {
        throw InvalidArgument("side information model needs at least one cell");
    }
    double total = 0.0;
    for (auto const& c : cells_) {
        if (!(c.probability > 0.0)) {
            throw InvalidArgument("side information cell '" + c.label + "' has nonpositive probability");
        }
        total += c.probability;
    }
    if (std::abs(total - 1.0) > 1e-10) {
        throw InvalidArgument("side information cell probabilities sum to " + std::to_string(total));
    }
}

SideInformationModel SideInformationModel::from_edges(ActuationDistribution const& dist,
                                                      std::span<double const> edges)
{
    if (edges.size() < 2) {
        throw InvalidArgument("a partition needs at least two edges");
    }
    std::vector<SideInfoCell> cells;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i + 1] > edges[i])) {
            throw InvalidArgument("partition edges must be strictly increasing");
        }
        Cell const cell{edges[i], edges[i + 1], i + 2 == edges.size()};
        try {
            auto r = restrict_to_cell(dist, cell);
            cells.push_back({cell_label(cell), r.probability, std::move(r.conditional)});
        } catch (EmptyCell const&) {
        }
    }
    return SideInformationModel(std::move(cells));
}

double SideInformationModel::consistency_error(ActuationDistribution const& base) const
{
    double mean = 0.0;
    double second = 0.0;
    for (auto const& c : cells_) {
        auto const m = moments(c.conditional);
        mean += c.probability * m.mean;
        second += c.probability * m.second_moment;
    }
    auto const b = moments(base);
    return std::max(std::abs(mean - b.mean), std::abs((second - mean * mean) - b.variance));
}

SideInformationModel uniform_bit_partition(ActuationDistribution const& dist, int k_bits)
{
    if (k_bits < 0 || k_bits > 20) {
        throw InvalidArgument("side information bits must lie in [0, 20]");
    }
    auto const& s = dist.support();
    if (!s.bounded()) {
        throw UnboundedSupport("equal-width partition needs bounded support; got " + dist.describe());
    }
    if (k_bits == 0 || s.lower == s.upper) {
        Cell const whole{s.lower, s.upper, true};
        return SideInformationModel({{cell_label(whole), 1.0, dist}});
    }
    std::size_t const count = std::size_t{1} << k_bits;
    std::vector<double> edges(count + 1);
    double const width = s.upper - s.lower;
    for (std::size_t i = 0; i <= count; ++i) {
        edges[i] = s.lower + width * static_cast<double>(i) / static_cast<double>(count);
    }
    edges.back() = s.upper;
    return SideInformationModel::from_edges(dist, edges);
}

SideInfoCapacity shannon_capacity_with_si(SideInformationModel const& model, CapacityQuery query)
{
    SideInfoCapacity out;
    out.sense = CapacitySense::shannon();
    for (auto const& cell : model.cells()) {
        out.per_cell.push_back(shannon_capacity(cell.conditional, query));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < out.per_cell.size(); ++i) {
        double const c = out.per_cell[i].value_bits;
        total = c == kInf ? kInf : total + model.cells()[i].probability * c;
    }
    out.value_bits = total;
    return out;
}

SideInfoCapacity eta_capacity_with_si(SideInformationModel const& model, double eta, CapacityQuery query)
{
    SideInfoCapacity out;
    out.sense = CapacitySense::moment(eta);
    double expected_min = 0.0;
    for (auto const& cell : model.cells()) {
        auto r = eta_capacity(cell.conditional, eta, query);
        // min_d E[|1 + B d|^eta | T] recovered from the per-cell capacity.
        expected_min += cell.probability * std::exp2(-eta * r.value_bits);
        out.per_cell.push_back(std::move(r));
    }
    out.value_bits = expected_min > 0.0 ? std::max(0.0, -std::log2(expected_min) / eta) : kInf;
    return out;
}

SideInfoCapacity capacity_with_si(SideInformationModel const& model, CapacitySense const& sense,
                                  CapacityQuery query)
{
    switch (sense.kind) {
        case CapacitySense::Kind::Shannon:
            return shannon_capacity_with_si(model, query);
        case CapacitySense::Kind::Eta:
            return eta_capacity_with_si(model, sense.eta, query);
        case CapacitySense::Kind::ZeroError:
            break;
    }
    throw InvalidArgument("side information capacity is defined for the Shannon and eta senses");
}

std::vector<SideInfoCurvePoint> si_value_curve(ActuationDistribution const& dist,
                                               int k_max,
                                               CapacitySense const& sense,
                                               CapacityQuery query)
{
    std::vector<SideInfoCurvePoint> curve;
    for (int k = 0; k <= k_max; ++k) {
        auto const model = uniform_bit_partition(dist, k);
        curve.push_back({k, capacity_with_si(model, sense, query).value_bits});
        if (k > 0 && curve[k].value_bits < curve[k - 1].value_bits - 1e-7) {
            throw Error("side information curve decreases at k = " + std::to_string(k));
        }
    }
    return curve;
}

}  // namespace ctlcap
