#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace puflab {

// SplitMix64 finalizer. All randomness in the library is derived by hashing
// (key, index) pairs, so every draw is addressable and order-independent:
// the same seed yields the same value for the same logical slot regardless
// of evaluation order or parallel scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stateless keyed RNG. fork() derives an independent substream; draws are
// indexed, never sequential.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    Rng fork(std::uint64_t stream) const { return Rng(mix64(key_ ^ mix64(stream + 0x632be59bd9b4e019ULL))); }

    std::uint64_t bits(std::uint64_t idx) const { return mix64(key_ ^ (idx + 0x9e3779b97f4a7c15ULL)); }

    // uniform on (0,1), strictly inside the open interval
    double uniform(std::uint64_t idx) const {
        return (static_cast<double>(bits(idx) >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes two indexed uniforms
    double normal(std::uint64_t idx) const {
        const double u1 = uniform(2 * idx);
        const double u2 = uniform(2 * idx + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
};

// Normal(mu, sigma) truncated to (0, inf); resamples deterministically from
// hashed attempt substreams. At the shipped parameters the loop runs once.
inline double positive_normal(const Rng& rng, std::uint64_t idx, double mu, double sigma) {
    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        const double v = mu + sigma * rng.fork(attempt).normal(idx);
        if (v > 0.0) return v;
    }
    throw std::runtime_error("positive_normal: truncation rejection did not terminate");
}

} // namespace puflab
