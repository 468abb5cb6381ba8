#pragma once

#include <cstdint>
#include <random>

namespace regmvst {

/// Named sub-streams of the root seed.  Every source of randomness derives
/// its engine as seed_stream(root, stream, index), so results do not depend
/// on thread scheduling or on how work is partitioned.
enum class Stream : std::uint64_t {
    mvst_sample = 1,
    gig_sample = 2,
    simulate_subject = 3,
    init_random = 4,
    engine_sync = 5,
    bootstrap_resample = 6,
    bootstrap_fit = 7,
    info_mc = 8,
    worker_delay = 9,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// Mixes (root, stream, index) into a well-dispersed 64-bit seed.
inline std::uint64_t seed_stream(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
    std::uint64_t s = root;
    std::uint64_t h = detail::splitmix64(s);
    s ^= static_cast<std::uint64_t>(stream) * 0xda942042e4dd58b5ULL;
    h ^= detail::splitmix64(s);
    s ^= index * 0xd6e8feb86659fd93ULL;
    h ^= detail::splitmix64(s);
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t root, Stream stream, std::uint64_t index = 0) {
    return std::mt19937_64(seed_stream(root, stream, index));
}

}  // namespace regmvst
