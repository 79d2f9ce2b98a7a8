#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace flowids {

// splitmix64 generator. Chosen over <random> engines because the library
// distributions are implementation-defined and this project promises
// byte-identical runs for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Multiply-shift map of the full 64-bit draw.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }

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

// Named sub-seed derivation: one user-facing seed fans out into independent
// streams (split, init, shuffle, dropout, grid cells, ...).
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    uint64_t h = 0xcbf29ce484222325ULL ^ base;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    Rng mix(h);
    return mix.next();
}

inline uint64_t derive_seed(uint64_t base, std::string_view label, uint64_t index) {
    return derive_seed(derive_seed(base, label) ^ (index * 0x9e3779b97f4a7c15ULL), "idx");
}

}  // namespace flowids
