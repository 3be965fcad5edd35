#pragma once

#include <cmath>
#include <cstdint>

namespace ellab {

// splitmix64 finalizer; full-avalanche 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

// Counter-based generator: draw k is mix64(seed + k*phi64). Derived streams
// re-key the seed, so layout/noise/action streams stay independent of how
// much each one has been consumed. Integer output is identical across
// platforms; uniform01/normal additionally depend only on IEEE754 doubles
// and libm, so runs reproduce bit-for-bit on a given machine.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t next_u64() { return mix64(seed_ + (++counter_) * kPhi); }

    // Independent stream keyed by (seed, tag); unaffected by draws made here.
    Rng derive(std::uint64_t tag) const { return Rng(mix64(seed_ ^ mix64(tag + kPhi))); }

    // [0, 1) with 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n), Lemire reduction
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // inclusive [lo, hi]
    int range(int lo, int hi) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // standard normal, Box-Muller with cached spare
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ellab
