#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ooc {

// Deterministic RNG used everywhere. Normal draws go through Box-Muller on
// raw mt19937_64 output instead of std::normal_distribution so that streams
// are identical across standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1).
    double uniform() {
        return (gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(gen_() % static_cast<uint64_t>(n));
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <class T>
    void fill_normal(T* dst, size_t n, double scale = 1.0) {
        for (size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(normal() * scale);
    }

    template <class T>
    void fill_uniform(T* dst, size_t n, double lo, double hi) {
        for (size_t i = 0; i < n; ++i) dst[i] = static_cast<T>(uniform(lo, hi));
    }

    // Derive an independent child stream; used to give each episode/model its
    // own seed from one top-level seed.
    Rng child(uint64_t salt) {
        uint64_t s = gen_() ^ (salt * 0x9e3779b97f4a7c15ull + 0xd1b54a32d192ed03ull);
        return Rng(s);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace ooc
