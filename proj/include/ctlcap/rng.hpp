#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ctlcap {

/// Philox4x32-10 block function (Salmon et al., SC'11).
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits. The
/// mapping is stateless, so any draw can be regenerated from its coordinates.
class Philox4x32
{
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) noexcept
    {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter round(Counter const& c, Key const& k) noexcept
    {
        std::uint64_t const p0 = std::uint64_t{kMul0} * c[0];
        std::uint64_t const p1 = std::uint64_t{kMul1} * c[2];
        auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto const lo0 = static_cast<std::uint32_t>(p0);
        auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto const lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// Sequential view of one counter-based substream.
///
/// A stream is identified by (seed, stream id); the n-th block of four words
/// is Philox(counter = {n, stream}, key = seed). Two streams with the same
/// coordinates produce identical sequences regardless of which thread runs
/// them or in what order.
class RngStream
{
public:
    RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t block = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream),
          block_(block)
    {
    }

    std::uint32_t next_u32() noexcept
    {
        if (used_ == 4) {
            refill();
        }
        return buffer_[used_++];
    }

    std::uint64_t next_u64() noexcept
    {
        std::uint64_t const hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1); safe to take logs of.
    double uniform_open() noexcept
    {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double const r = std::sqrt(-2.0 * std::log(uniform_open()));
        double const theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    bool bernoulli_half() noexcept { return (next_u32() & 1u) != 0; }

    std::uint64_t stream_id() const noexcept { return stream_; }

private:
    void refill() noexcept
    {
        Philox4x32::Counter const ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = Philox4x32::apply(ctr, key_);
        ++block_;
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ctlcap
