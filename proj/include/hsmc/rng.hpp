#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace hsmc {

// Counter-based pseudo-random generator (splitmix64 stream) with the sampling
// primitives the kernels need. All distributions are implemented here rather
// than taken from <random> so that a seed fixes the produced stream bitwise,
// independent of the standard library in use. Stream id "splitmix64/v1" is
// recorded in run metadata.
//
// Draw conventions:
//   * uniform01() returns a 53-bit uniform strictly inside (0, 1).
//   * normal() consumes exactly two uniforms (Box–Muller, cosine branch).
//   * gamma() uses Marsaglia–Tsang squeeze-rejection; the number of uniforms
//     consumed varies but is a deterministic function of the stream position.
class Rng {
public:
    static constexpr std::string_view stream_id = "splitmix64/v1";

    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Gamma(shape, rate 1). Marsaglia & Tsang (2000); shape < 1 handled by the
    // usual boost gamma(shape+1) * U^{1/shape}.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Draw from InvGamma(shape, rate): density ∝ x^{-(shape+1)} e^{-rate/x}.
    double inv_gamma(double shape, double rate) { return rate / gamma(shape); }

private:
    std::uint64_t state_;
};

} // namespace hsmc
