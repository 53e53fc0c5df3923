#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace trire {

// Counter-based generator (splitmix64 finalizer over seed+counter).
// The same seed produces the same draw sequence on every platform; we do
// not rely on std:: distributions, whose outputs are implementation-defined.
class RngState {
public:
    RngState() = default;
    explicit RngState(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1): 53 mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]: never returns 0, so a rate of exactly 0 never fires
    // a "rate >= draw" gate.
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Unbiased integer in [0, n). n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; consumes exactly two draws.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

    std::vector<std::uint32_t> permutation(std::size_t n) {
        std::vector<std::uint32_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint32_t>(i);
        shuffle(p);
        return p;
    }

    // Independent sub-stream; forks with distinct ids never collide in practice.
    RngState fork(std::uint64_t stream_id) const {
        std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ULL + stream_id * 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return RngState(z ^ (z >> 31));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t counter_ = 0;
};

inline double RngState::normal() {
    // Box-Muller, cacheless: u in (0,1] keeps log finite.
    double u1 = uniform_pos();
    double u2 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(two_pi * u2);
}

} // namespace trire
