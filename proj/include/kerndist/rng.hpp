#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace kerndist {

// Identifies a reproducible random stream.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace detail {

// SplitMix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: draw i of a stream is mix(key + i*gamma), where
// the key is derived from (seed, stream). Equal (seed, stream) therefore
// yields a bit-identical sequence on any thread or platform, and distinct
// streams are statistically independent.
class Rng {
public:
    explicit Rng(RngSpec spec)
        : spec_(spec),
          key_(detail::mix64(detail::mix64(spec.seed) ^ (spec.stream + 0x6a09e667f3bcc909ull))) {}

    Rng(std::uint64_t seed, std::uint64_t stream = 0) : Rng(RngSpec{seed, stream}) {}

    RngSpec spec() const noexcept { return spec_; }

    // Independent child stream; deterministic in (parent spec, index).
    Rng substream(std::uint64_t index) const {
        return Rng(RngSpec{spec_.seed, detail::mix64(spec_.stream ^ (index + 0xd6e8feb86659fd93ull))});
    }

    std::uint64_t next_u64() noexcept {
        return detail::mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ull);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via the polar method; the spare deviate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % bound;
    }

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    RngSpec spec_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace kerndist
