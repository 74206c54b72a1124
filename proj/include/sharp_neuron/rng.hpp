#pragma once

#include <cstdint>
#include <random>

namespace sn {

using Engine = std::mt19937_64;

// Stream identifiers. Every consumer of randomness derives its engine from
// (seed, stream, counter) so results do not depend on call order or thread count.
enum class Stream : std::uint64_t {
    features = 1,
    noise = 2,
    flip_subset = 3,
    holdout = 4,
    evaluation = 5,
    probes = 6,
    planted = 7,
    moments = 8,
    margin = 9,
    fd_probes = 10,
};

std::uint64_t mix64(std::uint64_t x);

// Seed for the sub-stream (seed, stream, counter, chunk).
std::uint64_t substream_seed(std::uint64_t seed, Stream stream, std::uint64_t counter, std::uint64_t chunk = 0);

inline Engine make_engine(std::uint64_t seed, Stream stream, std::uint64_t counter, std::uint64_t chunk = 0) {
    return Engine(substream_seed(seed, stream, counter, chunk));
}

}  // namespace sn
