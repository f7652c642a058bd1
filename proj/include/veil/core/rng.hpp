#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace veil {

// splitmix64; used both as a seed mixer and to derive independent substreams.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
    uint64_t a = splitmix64(s);
    uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

// Deterministic xoshiro256** stream. All distributions are implemented by
// hand so results do not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(uint64_t seed = 0, uint64_t stream = 0) {
        uint64_t s = mix_seed(seed, stream);
        for (auto& word : state_) word = splitmix64(s);
        have_gauss_ = false;
    }

    uint64_t next() {
        auto rotl = [](uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0,1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n)
    uint64_t below(uint64_t n) { return n ? next() % n : 0; }

    int range(int lo, int hi) { // inclusive bounds
        if (hi <= lo) return lo;
        return lo + int(below(uint64_t(hi - lo + 1)));
    }

    double gauss() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_cache_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 1e-300);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        gauss_cache_ = r * std::sin(a);
        have_gauss_ = true;
        return r * std::cos(a);
    }

private:
    uint64_t state_[4] = {};
    double gauss_cache_ = 0.0;
    bool have_gauss_ = false;
};

} // namespace veil
