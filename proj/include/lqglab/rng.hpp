#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lqg {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    // Independent stream for task `index` under a master seed.
    static Rng stream(std::uint64_t master, std::uint64_t index) {
        return Rng(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
    }

    // Uniform on the open interval (0,1).
    double uniform() {
        double u;
        do {
            u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        } while (u == 0.0);
        return u;
    }

    double normal() { return normal_(engine_); }

    double exponential() { return -std::log(uniform()); }

    // Gamma(shape, 1).
    double gamma(double shape) {
        std::gamma_distribution<double> g(shape, 1.0);
        return g(engine_);
    }

    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        std::poisson_distribution<std::uint64_t> p(mean);
        return p(engine_);
    }

    // Beta(a, b) via a gamma ratio.
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lqg
