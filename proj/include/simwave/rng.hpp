#ifndef SIMWAVE_RNG_HPP
#define SIMWAVE_RNG_HPP

#include <cstdint>
#include <random>

namespace simwave::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Order-independent child seed for sweep cell (value_index, run_index).
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t value_index,
                                std::uint64_t run_index) {
    return splitmix64(splitmix64(master ^ (value_index * 0xA24BAED4963EE407ULL)) ^
                      (run_index * 0x9FB21C651E98DF25ULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace simwave::rng

#endif  // SIMWAVE_RNG_HPP
