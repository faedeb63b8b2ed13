#pragma once

#include <cstdint>
#include <random>

namespace gpssm {

/// Library-wide default seed; every CLI subcommand uses it unless --seed is given.
inline constexpr std::uint64_t kDefaultSeed = 1729;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Mixes (seed, stream) into an independent sub-seed. Rollout r of a Monte
/// Carlo run uses stream r, so results for a given r do not depend on how
/// many rollouts run in total.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed ^ (0xA0761D6478BD642FULL * (stream + 1));
    std::uint64_t a = detail::splitmix64(state);
    std::uint64_t b = detail::splitmix64(state);
    return a ^ (b >> 1);
}

/// Seeded random stream with the distributions used across the library.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

    double gaussian() { return normal_(engine_); }
    double uniform() { return unit_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }
    /// Log-uniform draw over [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace gpssm
