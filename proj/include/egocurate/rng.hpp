#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace egocurate {

// Seeded random source with named substreams. The engine is std::mt19937_64
// (bit-exact across platforms); the distribution helpers below avoid
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(mix(seed)), seed_(seed) {}

    /// Independent stream derived from this seed and a stage name.
    /// Substreams depend only on the construction seed, not on draw order.
    Rng substream(std::string_view name) const {
        return Rng(mix(seed_ ^ fnv1a(name)));
    }

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), unbiased via rejection. n must be > 0.
    size_t uniform_below(size_t n) {
        const uint64_t bound = n;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<size_t>(x % bound);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes draws in pairs.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_below(i)]);
        }
    }

    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

  private:
    // splitmix64 finalizer, decorrelates adjacent seeds
    static uint64_t mix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    uint64_t seed_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace egocurate
