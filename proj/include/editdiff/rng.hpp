#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace editdiff {

/// Seeded random stream. All stochastic operations take one explicitly so that
/// runs are reproducible and independent streams can be handed to workers.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x5eed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        // 53 random bits; avoids the implementation-defined generate_canonical.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> dist(0, n - 1);
        return dist(engine_);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Draw from an unnormalized non-negative weight vector.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (u < weights[i]) return i;
            u -= weights[i];
        }
        // Rounding slack: return the last category with non-zero weight.
        for (std::size_t i = weights.size(); i-- > 0;) {
            if (weights[i] > 0.0) return i;
        }
        return weights.size() - 1;
    }

    double gamma(double shape) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return dist(engine_);
    }

    /// Seed for a child stream; consumes one draw.
    std::uint64_t split() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace editdiff
