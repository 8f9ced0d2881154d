#pragma once

#include <span>
#include <string>
#include <vector>

#include "ctlcap/capacity.hpp"
#include "ctlcap/distributions.hpp"

namespace ctlcap {

/// One value of the side information T: its probability and the law of B given it.
struct SideInfoCell
{
    std::string label;
    double probability;
    ActuationDistribution conditional;
};

/// Finite side information about the actuation gain.
class SideInformationModel
{
public:
    /// Validates that probabilities are positive and sum to 1 within 1e-10.
    explicit SideInformationModel(std::vector<SideInfoCell> cells);

    /// Splits `dist` at the given increasing edges; zero-probability cells are dropped.
    static SideInformationModel from_edges(ActuationDistribution const& dist, std::span<double const> edges);

    std::vector<SideInfoCell> const& cells() const noexcept { return cells_; }
    std::size_t size() const noexcept { return cells_.size(); }

    /// Largest deviation of the recombined mean and variance from `base`'s.
    double consistency_error(ActuationDistribution const& base) const;

private:
    std::vector<SideInfoCell> cells_;
};

/// Side information revealing which of 2^k equal-width cells of [b1, b2] holds B.
SideInformationModel uniform_bit_partition(ActuationDistribution const& dist, int k_bits);

struct SideInfoCapacity
{
    double value_bits = 0.0;
    CapacitySense sense;
    std::vector<CapacityResult> per_cell;
};

/// E_T[ max_d E[-log2|1 + B d| | T] ].
SideInfoCapacity shannon_capacity_with_si(SideInformationModel const& model, CapacityQuery query = {});

/// -(1/eta) log2 E_T[ min_d E[|1 + B d|^eta | T] ].
SideInfoCapacity eta_capacity_with_si(SideInformationModel const& model, double eta, CapacityQuery query = {});

SideInfoCapacity capacity_with_si(SideInformationModel const& model, CapacitySense const& sense,
                                  CapacityQuery query = {});

struct SideInfoCurvePoint
{
    int bits;
    double value_bits;
};

/// Capacities for k = 0..k_max bits of interval side information. Throws
/// Error if the curve decreases by more than 1e-7.
std::vector<SideInfoCurvePoint> si_value_curve(ActuationDistribution const& dist,
                                               int k_max,
                                               CapacitySense const& sense,
                                               CapacityQuery query = {});

}  // namespace ctlcap
