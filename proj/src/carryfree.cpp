#include "ctlcap/carryfree.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <sstream>

#include "ctlcap/error.hpp"

namespace ctlcap {
namespace {

// dst ^= src << offset (bit offsets within the word arrays).
void xor_shifted(std::vector<std::uint64_t>& dst, std::vector<std::uint64_t> const& src, std::int64_t offset)
{
    auto const word = static_cast<std::size_t>(offset / 64);
    auto const shift = static_cast<unsigned>(offset % 64);
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[word + i] ^= src[i] << shift;
        if (shift != 0) {
            dst[word + i + 1] ^= src[i] >> (64 - shift);
        }
    }
}

std::size_t bit_length(std::vector<std::uint64_t> const& words)
{
    return words.empty() ? 0 : 64 * (words.size() - 1) + static_cast<std::size_t>(64 - std::countl_zero(words.back()));
}

std::int64_t parse_int(std::string_view text, std::string_view what)
{
    std::int64_t v = 0;
    auto const* end = text.data() + text.size();
    auto const [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("bad " + std::string(what) + " '" + std::string(text) + "' in gain spec");
    }
    return v;
}

BitSeries random_block(std::int64_t top, int count, RngStream& rng)
{
    std::vector<std::uint64_t> words(static_cast<std::size_t>((count + 63) / 64));
    for (auto& w : words) {
        w = rng.next_u64();
    }
    int const spare = static_cast<int>(64 * words.size()) - count;
    if (spare > 0) {
        words.back() &= ~std::uint64_t{0} >> spare;
    }
    return BitSeries::from_words(top - count + 1, std::move(words));
}

struct PathDegrees
{
    std::vector<std::int64_t> max;
    std::vector<std::int64_t> sum;
};

void run_degree_path(CarryFreeGain const& gain, int g_a, DegreeParams const& params, std::uint64_t path,
                     PathDegrees& acc)
{
    RngStream rng(params.seed, path);
    BitSeries x = BitSeries::monomial(params.initial_degree);
    auto record = [&](int n, BitSeries const& s) {
        std::int64_t const d = s.is_zero() ? -params.window : s.degree();
        auto const i = static_cast<std::size_t>(n);
        acc.max[i] = std::max(acc.max[i], d);
        acc.sum[i] += d;
    };
    record(0, x);
    for (int n = 1; n <= params.horizon; ++n) {
        BitSeries next = x.shifted(g_a);
        BitSeries const b = gain.draw(rng, params.window);
        if (!next.is_zero()) {
            auto const step = one_step_control(next, gain, b, params.window);
            next = cf_add(next, cf_mul(b, step.u));
        }
        next = cf_add(next, random_block(-1, params.window, rng));
        x = next.truncated(params.window);
        record(n, x);
    }
}

DegreeReport finish_degrees(PathDegrees const& acc, int g_a, DegreeParams const& params)
{
    DegreeReport r;
    r.g_a = g_a;
    r.horizon = params.horizon;
    r.paths = params.paths;
    r.max_degree = acc.max;
    r.overall_max = *std::max_element(acc.max.begin(), acc.max.end());
    for (auto s : acc.sum) {
        r.mean_degree.push_back(static_cast<double>(s) / params.paths);
    }
    std::size_t const last = r.mean_degree.size() - 1;
    std::size_t const first = last / 2;
    if (last > first) {
        double const n = static_cast<double>(last - first + 1);
        double const mx = 0.5 * static_cast<double>(first + last);
        double my = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            my += r.mean_degree[i];
        }
        my /= n;
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            double const dx = static_cast<double>(i) - mx;
            sxy += dx * (r.mean_degree[i] - my);
            sxx += dx * dx;
        }
        r.mean_growth_per_step = sxy / sxx;
    }
    r.bounded = r.overall_max <= std::max<std::int64_t>(params.initial_degree, 0) + g_a;
    return r;
}

void validate_degree_params(int g_a, DegreeParams const& params)
{
    if (params.horizon < 1 || params.paths < 1) {
        throw InvalidArgument("degree simulation needs horizon >= 1 and paths >= 1");
    }
    if (params.window < 1 || params.window > 4096) {
        throw InvalidArgument("window must lie in [1, 4096]");
    }
    if (g_a < 0) {
        throw InvalidArgument("state gain degree g_a must be nonnegative");
    }
}

PathDegrees empty_acc(int horizon)
{
    auto const steps = static_cast<std::size_t>(horizon) + 1;
    return {std::vector<std::int64_t>(steps, kZeroDegree), std::vector<std::int64_t>(steps, 0)};
}

void merge_acc(PathDegrees& into, PathDegrees const& from)
{
    for (std::size_t i = 0; i < into.max.size(); ++i) {
        into.max[i] = std::max(into.max[i], from.max[i]);
        into.sum[i] += from.sum[i];
    }
}

}  // namespace

BitSeries::BitSeries(std::int64_t low, std::vector<std::uint64_t> words) : low_(low), words_(std::move(words))
{
    normalize();
}

void BitSeries::normalize()
{
    while (!words_.empty() && words_.back() == 0) {
        words_.pop_back();
    }
    if (words_.empty()) {
        low_ = 0;
        return;
    }
    std::size_t skip = 0;
    while (words_[skip] == 0) {
        ++skip;
    }
    auto const shift = static_cast<unsigned>(std::countr_zero(words_[skip]));
    if (skip == 0 && shift == 0) {
        return;
    }
    std::vector<std::uint64_t> out(words_.size() - skip);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t w = words_[skip + i] >> shift;
        if (shift != 0 && skip + i + 1 < words_.size()) {
            w |= words_[skip + i + 1] << (64 - shift);
        }
        out[i] = w;
    }
    while (!out.empty() && out.back() == 0) {
        out.pop_back();
    }
    low_ += static_cast<std::int64_t>(64 * skip + shift);
    words_ = std::move(out);
}

BitSeries BitSeries::monomial(std::int64_t level)
{
    return {level, {1}};
}

BitSeries BitSeries::from_levels(std::span<std::int64_t const> levels)
{
    BitSeries out;
    for (auto level : levels) {
        out = cf_add(out, monomial(level));
    }
    return out;
}

BitSeries BitSeries::from_string(std::int64_t top, std::string_view bits)
{
    std::vector<std::int64_t> levels;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == '1') {
            levels.push_back(top - static_cast<std::int64_t>(i));
        } else if (bits[i] != '0') {
            throw InvalidArgument("bit string may contain only '0' and '1'");
        }
    }
    return from_levels(levels);
}

BitSeries BitSeries::from_words(std::int64_t low, std::vector<std::uint64_t> words)
{
    return {low, std::move(words)};
}

std::int64_t BitSeries::degree() const noexcept
{
    if (is_zero()) {
        return kZeroDegree;
    }
    return low_ + static_cast<std::int64_t>(bit_length(words_)) - 1;
}

bool BitSeries::bit(std::int64_t level) const noexcept
{
    if (is_zero() || level < low_) {
        return false;
    }
    auto const off = static_cast<std::uint64_t>(level - low_);
    if (off >= 64 * words_.size()) {
        return false;
    }
    return ((words_[off / 64] >> (off % 64)) & 1u) != 0;
}

std::vector<std::int64_t> BitSeries::levels() const
{
    std::vector<std::int64_t> out;
    for (std::size_t i = words_.size(); i-- > 0;) {
        for (int j = 63; j >= 0; --j) {
            if ((words_[i] >> j) & 1u) {
                out.push_back(low_ + static_cast<std::int64_t>(64 * i) + j);
            }
        }
    }
    return out;
}

std::size_t BitSeries::popcount() const noexcept
{
    std::size_t n = 0;
    for (auto w : words_) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

BitSeries BitSeries::shifted(std::int64_t k) const
{
    BitSeries out = *this;
    if (!out.is_zero()) {
        out.low_ += k;
    }
    return out;
}

BitSeries BitSeries::truncated(int window) const
{
    if (window < 1) {
        throw InvalidArgument("window must be positive");
    }
    return is_zero() ? *this : above(degree() - window + 1);
}

BitSeries BitSeries::above(std::int64_t level) const
{
    if (is_zero() || level <= low_) {
        return *this;
    }
    auto const off = static_cast<std::uint64_t>(level - low_);
    if (off >= bit_length(words_)) {
        return {};
    }
    std::vector<std::uint64_t> words = words_;
    std::size_t const word = off / 64;
    auto const shift = static_cast<unsigned>(off % 64);
    for (std::size_t i = 0; i < word; ++i) {
        words[i] = 0;
    }
    words[word] &= ~std::uint64_t{0} << shift;
    return {low_, std::move(words)};
}

std::string BitSeries::top_bits(int count) const
{
    std::string out;
    if (is_zero()) {
        return std::string(static_cast<std::size_t>(std::max(count, 0)), '0');
    }
    std::int64_t const d = degree();
    for (int i = 0; i < count; ++i) {
        out.push_back(bit(d - i) ? '1' : '0');
    }
    return out;
}

BitSeries cf_add(BitSeries const& x, BitSeries const& y)
{
    if (x.is_zero()) {
        return y;
    }
    if (y.is_zero()) {
        return x;
    }
    std::int64_t const low = std::min(x.low_, y.low_);
    std::int64_t const top = std::max(x.degree(), y.degree());
    std::vector<std::uint64_t> words(static_cast<std::size_t>((top - low) / 64 + 2), 0);
    xor_shifted(words, x.words_, x.low_ - low);
    xor_shifted(words, y.words_, y.low_ - low);
    return {low, std::move(words)};
}

BitSeries cf_mul(BitSeries const& x, BitSeries const& y)
{
    if (x.is_zero() || y.is_zero()) {
        return {};
    }
    std::size_t const bits = bit_length(x.words_) + bit_length(y.words_);
    std::vector<std::uint64_t> words(bits / 64 + 2, 0);
    for (std::size_t i = 0; i < x.words_.size(); ++i) {
        std::uint64_t w = x.words_[i];
        while (w != 0) {
            int const j = std::countr_zero(w);
            w &= w - 1;
            xor_shifted(words, y.words_, static_cast<std::int64_t>(64 * i) + j);
        }
    }
    return {x.low_ + y.low_, std::move(words)};
}

CarryFreeGain::CarryFreeGain(int g_det,
                             int g_ran,
                             std::vector<bool> det_bits,
                             std::map<std::int64_t, bool> fixed_levels,
                             std::set<std::int64_t> known_levels)
    : g_det_(g_det), g_ran_(g_ran), det_bits_(std::move(det_bits)), fixed_(std::move(fixed_levels)),
      known_(std::move(known_levels))
{
    if (g_ran > g_det) {
        throw InvalidArgument("g_ran must not exceed g_det");
    }
    auto const width = static_cast<std::size_t>(g_det - g_ran);
    if (det_bits_.empty() && width > 0) {
        det_bits_.assign(width, false);
        det_bits_.front() = true;
    }
    if (det_bits_.size() != width) {
        throw InvalidArgument("det_bits must cover levels g_det .. g_ran + 1");
    }
    if (width > 0 && !det_bits_.front()) {
        throw InvalidArgument("leading deterministic bit must be 1");
    }
    for (auto const& [level, value] : fixed_) {
        if (level >= g_ran) {
            throw InvalidArgument("fixed levels must lie below g_ran");
        }
    }
    for (auto level : known_) {
        if (level > g_ran) {
            throw InvalidArgument("revealed levels must lie at or below g_ran");
        }
        if (fixed_.contains(level)) {
            throw InvalidArgument("level " + std::to_string(level) + " is both fixed and revealed");
        }
        if (level == g_ran && g_det == g_ran) {
            throw InvalidArgument("revealing a random leading bit is not supported");
        }
    }
}

CarryFreeGain CarryFreeGain::parse(std::string_view spec)
{
    constexpr std::string_view prefix = "cf:";
    if (!spec.starts_with(prefix)) {
        throw ConfigError("gain spec must start with 'cf:'");
    }
    spec.remove_prefix(prefix.size());
    std::vector<std::string_view> parts;
    while (true) {
        auto const comma = spec.find(',');
        parts.push_back(spec.substr(0, comma));
        if (comma == std::string_view::npos) {
            break;
        }
        spec.remove_prefix(comma + 1);
    }
    if (parts.size() < 2) {
        throw ConfigError("gain spec needs g_det and g_ran");
    }
    auto const g_det = static_cast<int>(parse_int(parts[0], "g_det"));
    auto const g_ran = static_cast<int>(parse_int(parts[1], "g_ran"));
    std::vector<bool> det;
    std::map<std::int64_t, bool> fixed;
    std::set<std::int64_t> known;
    for (std::size_t i = 2; i < parts.size(); ++i) {
        auto const part = parts[i];
        auto const eq = part.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("gain option '" + std::string(part) + "' lacks '='");
        }
        auto const key = part.substr(0, eq);
        auto const value = part.substr(eq + 1);
        if (key == "det") {
            for (char c : value) {
                if (c != '0' && c != '1') {
                    throw ConfigError("det bits must be 0 or 1");
                }
                det.push_back(c == '1');
            }
        } else if (key == "fixed") {
            auto const colon = value.find(':');
            if (colon == std::string_view::npos) {
                throw ConfigError("fixed level needs '<level>:<bit>'");
            }
            auto const bit = parse_int(value.substr(colon + 1), "fixed bit");
            if (bit != 0 && bit != 1) {
                throw ConfigError("fixed bit must be 0 or 1");
            }
            fixed[parse_int(value.substr(0, colon), "fixed level")] = bit == 1;
        } else if (key == "known") {
            known.insert(parse_int(value, "known level"));
        } else {
            throw ConfigError("unknown gain option '" + std::string(key) + "'");
        }
    }
    try {
        return CarryFreeGain(g_det, g_ran, std::move(det), std::move(fixed), std::move(known));
    } catch (InvalidArgument const& e) {
        throw ConfigError(e.what());
    }
}

bool CarryFreeGain::known_to_controller(std::int64_t level) const
{
    if (level > g_ran_) {
        return true;
    }
    return fixed_.contains(level) || known_.contains(level);
}

int CarryFreeGain::cancellable_levels() const
{
    int k = g_det_ - g_ran_;
    if (k == 0) {
        return 0;
    }
    for (std::int64_t level = g_ran_; known_to_controller(level); --level) {
        ++k;
    }
    return k;
}

BitSeries CarryFreeGain::draw(RngStream& rng, int window) const
{
    std::vector<std::int64_t> levels;
    for (int i = 0; i < window; ++i) {
        std::int64_t const level = static_cast<std::int64_t>(g_det_) - i;
        bool on = false;
        if (level > g_ran_) {
            on = det_bits_[static_cast<std::size_t>(g_det_ - level)];
        } else if (auto it = fixed_.find(level); it != fixed_.end()) {
            on = it->second;
        } else {
            on = rng.bernoulli_half();
        }
        if (on) {
            levels.push_back(level);
        }
    }
    return BitSeries::from_levels(levels);
}

CarryFreeGain CarryFreeGain::without_side_information() const
{
    return CarryFreeGain(g_det_, g_ran_, det_bits_, fixed_, {});
}

std::string CarryFreeGain::describe() const
{
    std::ostringstream os;
    os << "cf:" << g_det_ << ',' << g_ran_;
    if (!det_bits_.empty()) {
        os << ",det=";
        for (bool b : det_bits_) {
            os << (b ? '1' : '0');
        }
    }
    for (auto const& [level, value] : fixed_) {
        os << ",fixed=" << level << ':' << (value ? 1 : 0);
    }
    for (auto level : known_) {
        os << ",known=" << level;
    }
    return os.str();
}

ControlStep one_step_control(BitSeries const& state, CarryFreeGain const& gain, BitSeries const& realized, int window)
{
    if (state.is_zero()) {
        throw ZeroState("one-step control needs a nonzero state; apply zero control instead");
    }
    std::int64_t const d = state.degree();
    std::int64_t const top = d - gain.g_det();
    int const k = std::min(gain.cancellable_levels(), window);
    if (k == 0) {
        // Leading gain bit is random: aim at it and cancel with probability 1/2.
        return {BitSeries::monomial(top), 0};
    }
    // Lower-triangular GF(2) system: level d - j of state + b u vanishes iff
    // u_j = t_j + sum_{i=1..j} c_i u_{j-i}, where c_0 = 1.
    std::vector<char> c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        c[static_cast<std::size_t>(i)] = realized.bit(gain.g_det() - i) ? 1 : 0;
    }
    std::vector<char> u(static_cast<std::size_t>(k));
    std::vector<std::int64_t> levels;
    for (int j = 0; j < k; ++j) {
        char v = state.bit(d - j) ? 1 : 0;
        for (int i = 1; i <= j; ++i) {
            v ^= static_cast<char>(c[static_cast<std::size_t>(i)] & u[static_cast<std::size_t>(j - i)]);
        }
        u[static_cast<std::size_t>(j)] = v;
        if (v != 0) {
            levels.push_back(top - j);
        }
    }
    return {BitSeries::from_levels(levels), k};
}

DegreeReport simulate_degrees(CarryFreeGain const& gain, int g_a, DegreeParams const& params)
{
    validate_degree_params(g_a, params);
    PathDegrees total = empty_acc(params.horizon);
    // Max and integer sums are order-independent, so any merge order gives
    // the same report.
#pragma omp parallel
    {
        PathDegrees local = empty_acc(params.horizon);
#pragma omp for schedule(dynamic, 4)
        for (int p = 0; p < params.paths; ++p) {
            run_degree_path(gain, g_a, params, static_cast<std::uint64_t>(p), local);
        }
#pragma omp critical
        merge_acc(total, local);
    }
    return finish_degrees(total, g_a, params);
}

double one_step_decay(CarryFreeGain const& gain, int samples, std::uint64_t seed, int window)
{
    if (samples < 1) {
        throw InvalidArgument("decay measurement needs at least one sample");
    }
    constexpr std::int64_t kStartDegree = 1 << 20;
    std::int64_t total = 0;
#pragma omp parallel for reduction(+ : total) schedule(static)
    for (int s = 0; s < samples; ++s) {
        RngStream rng(seed, static_cast<std::uint64_t>(s));
        BitSeries const state =
            cf_add(BitSeries::monomial(kStartDegree), random_block(kStartDegree - 1, window - 1, rng));
        BitSeries const b = gain.draw(rng, window);
        auto const step = one_step_control(state, gain, b, window);
        BitSeries const next = cf_add(state, cf_mul(b, step.u)).above(kStartDegree - window + 1);
        total += next.is_zero() ? window : kStartDegree - next.degree();
    }
    return static_cast<double>(total) / samples;
}

int cf_zero_error_capacity(CarryFreeGain const& gain)
{
    return gain.cancellable_levels();
}

int cf_shannon_capacity(CarryFreeGain const& gain)
{
    if (!gain.known_levels().empty()) {
        throw InvalidArgument("carry-free Shannon capacity is defined here without side information");
    }
    return gain.g_det() - gain.g_ran() + 1;
}

namespace reference {

DegreeReport simulate_degrees(CarryFreeGain const& gain, int g_a, DegreeParams const& params)
{
    validate_degree_params(g_a, params);
    PathDegrees acc = empty_acc(params.horizon);
    for (int p = 0; p < params.paths; ++p) {
        run_degree_path(gain, g_a, params, static_cast<std::uint64_t>(p), acc);
    }
    return finish_degrees(acc, g_a, params);
}

}  // namespace reference

}  // namespace ctlcap
