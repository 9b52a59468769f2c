#pragma once

// Counter-based noise for reproducible simulations. Replicate r of a run with
// master seed m uses the key replicate_key(m, r); draw k of that replicate is
// splitmix64(key + (k + 1) * 0x9E3779B97F4A7C15). Uniforms take the top 53
// bits, centred in their bucket so they lie in (0, 1). Gaussians use the
// Box-Muller pair (sqrt(-2 ln u1) cos(2 pi u2), sqrt(-2 ln u1) sin(2 pi u2)).
//
// std::normal_distribution is avoided on purpose: its algorithm is left to
// the standard library, so streams would differ between toolchains.

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Dense>

namespace tvtree {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += kGoldenGamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t replicate_key(std::uint64_t master_seed, std::uint64_t replicate) {
    return splitmix64(splitmix64(master_seed) ^ (replicate * kGoldenGamma + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next() { return splitmix64(key_ + (++counter_) * kGoldenGamma); }
    double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// n independent standard normals from the stream of `key`.
inline Eigen::VectorXd gaussian_vector(std::uint64_t key, Eigen::Index n) {
    CounterRng rng(key);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; i += 2) {
        const double u1 = rng.uniform(), u2 = rng.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        z[i] = r * std::cos(a);
        if (i + 1 < n) z[i + 1] = r * std::sin(a);
    }
    return z;
}

}  // namespace tvtree
