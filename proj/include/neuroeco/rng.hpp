#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace neuroeco {

/// Counter-based random numbers: every draw is a pure function of
/// (seed, entity, step, draw index), so results never depend on how work
/// is partitioned across threads.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t prf(std::uint64_t seed, std::uint64_t entity, std::uint64_t step,
                            std::uint64_t draw) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ entity);
    h = mix64(h ^ (step * 0x2545f4914f6cdd1dULL));
    return mix64(h ^ (draw + 0x243f6a8885a308d3ULL));
}

/// FNV-1a over a label, folded into the parent seed. Used to derive
/// independent per-module seeds from one global seed.
constexpr std::uint64_t derive(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return mix64(seed ^ h);
}

/// Uniform in [0, 1) with 53 bits.
constexpr double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace rng

/// A stream of draws for one entity at one step.
class Draws {
public:
    constexpr Draws(std::uint64_t seed, std::uint64_t entity, std::uint64_t step)
        : seed_(seed), entity_(entity), step_(step) {}

    constexpr std::uint64_t bits() { return rng::prf(seed_, entity_, step_, next_++); }
    constexpr double uniform() { return rng::to_unit(bits()); }
    constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [0, n).
    constexpr std::uint64_t below(std::uint64_t n) {
        auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }
    bool chance(double p) { return uniform() < p; }
    /// Exponential with the given rate (events per unit).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::uint64_t seed_;
    std::uint64_t entity_;
    std::uint64_t step_;
    std::uint64_t next_ = 0;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace neuroeco
