#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace trustfield {

/// Deterministic random source. All distributions are implemented on top of
/// the raw engine output so that a given seed produces the same stream on
/// every platform; std::shuffle and the std:: distributions do not give that
/// guarantee.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), unbiased. n must be > 0.
    std::size_t uniform_index(std::size_t n);

    double exponential(double rate);

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives a per-stage seed from one master seed, so a single --seed flag
/// reproduces every stochastic stage of a run.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage);

/// Variant for indexed streams (for example one sub-seed per window).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage, std::uint64_t index);

}  // namespace trustfield
