#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lcsbench {

/// splitmix64 finalizer, used to derive independent seeds from a master seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from `master` and a path of integer tags. Equal
/// (master, path) pairs always give the same seed.
inline std::uint64_t deriveSeed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = splitmix64(master);
    for (auto tag : path) h = splitmix64(h ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
    return h;
}

/// Deterministic pseudorandom stream owned by exactly one worker at a time.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform integer on [lo, hi] inclusive.
    int uniformInt(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform01() < p); }

    /// Geometric variable supported on integers >= 1 with success probability p.
    int geometric(double p) { return 1 + std::geometric_distribution<int>(p)(engine_); }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    std::uint64_t next() { return engine_(); }

    /// Returns a new stream seeded from this one; advances this stream.
    Rng split() { return Rng(splitmix64(engine_())); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace lcsbench
