#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace dnsxray {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Counter-based generator: output i of stream (seed, stream) is a pure
/// function of (seed, stream, i), so streams can be consumed in any order or
/// on any thread. Distribution helpers are hand-rolled so results do not
/// depend on the standard library implementation.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed ^ mix64(stream ^ 0x5bd1e995ull))) {}

    std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    /// Child stream; does not advance this generator.
    CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream, 0); }

    /// [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~0ull - (~0ull % n);
        std::uint64_t v;
        do v = next();
        while (v >= limit);
        return v % n;
    }

    /// Uniform in [lo, hi].
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        if (lambda > 30.0) {
            const double v = std::round(lambda + std::sqrt(lambda) * normal());
            return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
        }
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double p = uniform();
        while (p > limit) {
            ++k;
            p *= uniform();
        }
        return k;
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
    }

private:
    CounterRng(std::uint64_t key, std::uint64_t stream, int) : key_(mix64(key ^ mix64(stream))) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace dnsxray
