// random.hpp: Seedable, splittable random streams
//
// Every random draw in the library comes from an Engine obtained through
// make_stream(seed, stream). The stream seed is a SplitMix64 hash of the pair,
// so the draws of stream k never depend on how many other streams exist or on
// the order in which they are consumed. Ensembles use stream = instance index.

#pragma once

#include <cstdint>
#include <random>

namespace fgrlab::random {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t stream) {
    return Engine(stream_seed(seed, stream));
}

// Purpose tags keep independent uses of one (seed, instance) pair apart.
enum class Purpose : std::uint64_t {
    Occupations = 1,
    Coupling = 2,
    Phases = 3,
    Donor = 4,
};

inline Engine make_stream(std::uint64_t seed, std::uint64_t stream, Purpose purpose) {
    return Engine(stream_seed(stream_seed(seed, static_cast<std::uint64_t>(purpose)), stream));
}

} // namespace fgrlab::random
