#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctlcap/rng.hpp"

namespace ctlcap {

/// Degree reported for the zero series.
inline constexpr std::int64_t kZeroDegree = std::numeric_limits<std::int64_t>::min();

/// Default number of levels kept below the leading bit.
inline constexpr int kDefaultWindow = 64;

/// Binary formal series sum_i c_i z^i with finitely many nonzero c_i.
/// Arithmetic is exact; `truncated` drops levels far below the leading bit.
class BitSeries
{
public:
    BitSeries() = default;

    static BitSeries zero() { return {}; }
    static BitSeries monomial(std::int64_t level);
    static BitSeries from_levels(std::span<std::int64_t const> levels);
    /// Bits for levels top, top-1, ...; '1' and '0' only.
    static BitSeries from_string(std::int64_t top, std::string_view bits);
    /// Bit j of words[j / 64] is level low + j.
    static BitSeries from_words(std::int64_t low, std::vector<std::uint64_t> words);

    bool is_zero() const noexcept { return words_.empty(); }
    /// Leading level, or kZeroDegree.
    std::int64_t degree() const noexcept;
    /// Lowest nonzero level, or kZeroDegree.
    std::int64_t lowest() const noexcept { return is_zero() ? kZeroDegree : low_; }
    bool bit(std::int64_t level) const noexcept;
    std::vector<std::int64_t> levels() const;
    std::size_t popcount() const noexcept;

    BitSeries shifted(std::int64_t k) const;
    /// Keeps levels degree .. degree - window + 1.
    BitSeries truncated(int window) const;
    /// Keeps levels >= level.
    BitSeries above(std::int64_t level) const;

    /// Leading bits as "1011..." for levels degree down to degree - count + 1.
    std::string top_bits(int count) const;

    friend BitSeries cf_add(BitSeries const& x, BitSeries const& y);
    friend BitSeries cf_mul(BitSeries const& x, BitSeries const& y);
    friend bool operator==(BitSeries const&, BitSeries const&) = default;

private:
    BitSeries(std::int64_t low, std::vector<std::uint64_t> words);
    void normalize();

    // Bit j of words_ is level low_ + j; words_[0] bit 0 is set unless zero.
    std::int64_t low_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Level-wise XOR.
BitSeries cf_add(BitSeries const& x, BitSeries const& y);
/// GF(2) convolution.
BitSeries cf_mul(BitSeries const& x, BitSeries const& y);

/// Random actuation gain b(z): deterministic levels g_det..g_ran+1 (leading
/// bit 1), a Bernoulli(1/2) bit at g_ran, and below it either fixed or
/// random bits. Random levels in `known_levels` are revealed to the
/// controller before it acts.
class CarryFreeGain
{
public:
    CarryFreeGain(int g_det,
                  int g_ran,
                  std::vector<bool> det_bits = {},
                  std::map<std::int64_t, bool> fixed_levels = {},
                  std::set<std::int64_t> known_levels = {});

    /// Parses `cf:g_det,g_ran[,det=<bits>][,fixed=<level>:<bit>]...[,known=<level>]...`.
    static CarryFreeGain parse(std::string_view spec);

    int g_det() const noexcept { return g_det_; }
    int g_ran() const noexcept { return g_ran_; }
    std::vector<bool> const& det_bits() const noexcept { return det_bits_; }
    std::map<std::int64_t, bool> const& fixed_levels() const noexcept { return fixed_; }
    std::set<std::int64_t> const& known_levels() const noexcept { return known_; }

    /// Whether the controller knows the bit at `level` before acting.
    bool known_to_controller(std::int64_t level) const;
    /// Top-level bits the controller can cancel: g_det - g_ran plus the
    /// contiguous run of known levels starting at g_ran.
    int cancellable_levels() const;

    /// Draws b(z) restricted to levels g_det .. g_det - window + 1.
    BitSeries draw(RngStream& rng, int window = kDefaultWindow) const;

    /// Same gain with the side information removed.
    CarryFreeGain without_side_information() const;

    std::string describe() const;

private:
    int g_det_;
    int g_ran_;
    std::vector<bool> det_bits_;
    std::map<std::int64_t, bool> fixed_;
    std::set<std::int64_t> known_;
};

struct ControlStep
{
    BitSeries u;
    int cancel_depth = 0;
};

/// Control u(z) of degree deg(state) - g_det that zeroes the top
/// cancellable levels of state + b u for every value of the unknown gain
/// bits. `realized` supplies the values of the known bits. Throws ZeroState
/// for the zero series.
ControlStep one_step_control(BitSeries const& state, CarryFreeGain const& gain, BitSeries const& realized,
                             int window = kDefaultWindow);

struct DegreeParams
{
    int horizon = 1000;
    int paths = 1000;
    std::uint64_t seed = 0;
    int window = kDefaultWindow;
    /// Degree of the initial state x[0] = z^d0.
    std::int64_t initial_degree = 0;
};

struct DegreeReport
{
    int g_a = 0;
    int horizon = 0;
    int paths = 0;
    /// Per step n = 0..horizon: max and mean of deg x[n] over paths; the zero
    /// series counts as -window.
    std::vector<std::int64_t> max_degree;
    std::vector<double> mean_degree;
    std::int64_t overall_max = 0;
    /// Least-squares slope of mean_degree over the final half.
    double mean_growth_per_step = 0.0;
    /// Whether deg x[n] <= max(d0, 0) + g_a held on every path and step.
    bool bounded = false;
};

/// x[n+1] = z^{g_a} x[n] + b[n] u[n] + w[n], with w[n] random on levels
/// -1 .. -window and u[n] from one_step_control.
DegreeReport simulate_degrees(CarryFreeGain const& gain, int g_a, DegreeParams const& params);

/// Mean of deg(s) - deg(s + b u) for random states of high degree under the
/// one-step control, over `samples` draws.
double one_step_decay(CarryFreeGain const& gain, int samples, std::uint64_t seed, int window = kDefaultWindow);

/// g_det - g_ran, plus contiguous side-information levels.
int cf_zero_error_capacity(CarryFreeGain const& gain);

/// g_det - g_ran + 1; throws InvalidArgument when side information is present.
int cf_shannon_capacity(CarryFreeGain const& gain);

namespace reference {

/// Serial version of ctlcap::simulate_degrees.
DegreeReport simulate_degrees(CarryFreeGain const& gain, int g_a, DegreeParams const& params);

}  // namespace reference

}  // namespace ctlcap
