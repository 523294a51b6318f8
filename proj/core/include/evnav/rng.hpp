#pragma once

#include <cstdint>
#include <random>

namespace evnav {

// Deterministic RNG. Every stochastic component takes one of these explicitly;
// nothing in the library touches global random state.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // Truncated normal by rejection: redraw until the value lands in (lo, hi].
    double truncated_normal(double mean, double stddev, double lo, double hi) {
        for (;;) {
            double v = normal(mean, stddev);
            if (v > lo && v <= hi) return v;
        }
    }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return std::uniform_int_distribution<int>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive independent substream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

// Named substreams so env processes are policy-independent (common random
// numbers across methods evaluated on the same seed).
enum class Stream : std::uint64_t {
    Init = 1,
    Velocity = 2,
    Price = 3,
    Policy = 4,
    Training = 5,
};

inline SeededRng substream(std::uint64_t seed, Stream s, std::uint64_t index) {
    return SeededRng(mix_seed(seed, static_cast<std::uint64_t>(s), index));
}

}  // namespace evnav
