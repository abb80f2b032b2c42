#pragma once

#include <cstdint>
#include <vector>

namespace taurus::sim {

// SplitMix64. Hand-rolled so that streams are identical across platforms
// and standard library versions; the determinism contract depends on it.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n). n must be > 0.
    uint64_t below(uint64_t n) { return next() % n; }

    // Uniform in [lo, hi] inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + below(hi - lo + 1); }

    // Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }

    bool chance(double p) { return unit() < p; }

    // Bernoulli via integer threshold; faster and bit-stable.
    bool chance_u64(uint64_t threshold) { return next() < threshold; }

    static uint64_t threshold_for(double p) {
        if (p <= 0) return 0;
        if (p >= 1) return ~0ULL;
        return static_cast<uint64_t>(p * 18446744073709551616.0);
    }

    Rng fork() { return Rng(next()); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace taurus::sim
