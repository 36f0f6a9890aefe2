#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "dmgrid/common.hpp"

namespace dmgrid {

/// SplitMix64 finalizer. Used to derive independent per-run streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Seeded random stream owned by exactly one run.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return normal_(engine_); }
    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    Vec gaussian(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    /// Isotropic random direction (standard normal, normalized).
    Vec unit_vector(int dim) {
        for (;;) {
            Vec v = gaussian(dim);
            const double n = v.norm();
            if (n > 1e-12) return v / n;
        }
    }

    template <class T>
    void shuffle(std::vector<T>& values) {
        std::shuffle(values.begin(), values.end(), engine_);
    }

    /// Sample an index from non-negative weights (need not be normalized).
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dmgrid
