#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fedpmg {

// splitmix64 step; used both as a standalone mixer and to derive sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic hierarchical seed derivation: every component that needs
// randomness gets derive_seed(master, tag0, tag1, ...) so streams never collide.
inline std::uint64_t derive_seed(std::uint64_t seed) { return seed; }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, Rest... rest) {
    std::uint64_t s = seed ^ (tag + 0x632be59bd9b4e019ULL);
    std::uint64_t mixed = splitmix64(s);
    return derive_seed(mixed, rest...);
}

// mt19937_64 engine with hand-written draw mappers. The engine itself is
// pinned by the standard; the mappers avoid any dependence on library
// distribution internals, so sequences are reproducible everywhere.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1) with 53 bits of mantissa
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased integer in [0, n) by rejection
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    int uniform_index(int n) { return static_cast<int>(uniform_int(static_cast<std::uint64_t>(n))); }

    // standard normal via Box-Muller, spare value cached
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace fedpmg
