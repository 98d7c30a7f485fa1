#pragma once

#include <cmath>
#include <cstdint>

#include "axdg/tensor.hpp"

namespace axdg {

/// Splittable deterministic random stream. A stream is identified by a seed
/// plus the chain of child() tags used to reach it, so (seed, epoch, batch,
/// purpose, sample) always names the same draws regardless of thread
/// schedule or platform. The core generator is SplitMix64; normals come from
/// Box-Muller on our own uniforms, so sequences are bit-stable across
/// standard libraries.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(mix(0x9E3779B97F4A7C15ull, seed)) {}

    RngStream child(std::uint64_t tag) const { return RngStream(state_, tag); }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    Tensor normal_tensor(std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = normal();
        return t;
    }

    Tensor uniform_tensor(std::vector<std::size_t> shape, double lo, double hi) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = uniform(lo, hi);
        return t;
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

  private:
    RngStream(std::uint64_t parent_state, std::uint64_t tag)
        : state_(mix(parent_state, tag)) {}

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Purpose tags for deriving child streams; keeps call sites self-describing.
namespace rng_tag {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kEpsA = 2;
inline constexpr std::uint64_t kEpsZ = 3;
inline constexpr std::uint64_t kBinarize = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kLabelPick = 6;
inline constexpr std::uint64_t kEval = 7;
inline constexpr std::uint64_t kData = 8;
}  // namespace rng_tag

}  // namespace axdg
