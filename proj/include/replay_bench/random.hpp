#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace replay_bench {

/// 64-bit FNV-1a; used for seed derivation and parameter checksums.
constexpr std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for a named purpose. Stable across runs and platforms.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
    return splitmix64(seed ^ splitmix64(fnv1a(purpose)));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
    return splitmix64(derive_seed(seed, purpose) + splitmix64(index + 1));
}

/// Random stream owned by one consumer. Built on mt19937_64 (whose output
/// sequence is fixed by the standard) with hand-written distributions so
/// results do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Index drawn from an unnormalized discrete distribution.
    template <typename Weights>
    std::size_t categorical(const Weights& weights) {
        double total = 0.0;
        for (auto w : weights) total += static_cast<double>(w);
        double target = uniform() * total;
        std::size_t last_positive = 0;
        std::size_t i = 0;
        for (auto w : weights) {
            if (static_cast<double>(w) > 0.0) {
                last_positive = i;
                if (target < static_cast<double>(w)) return i;
            }
            target -= static_cast<double>(w);
            ++i;
        }
        return last_positive;
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// 0..n-1 in a seeded random order.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    return order;
}

}  // namespace replay_bench
