#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mds {

using Rng = std::mt19937_64;

/// Independent generator for a (seed, stream...) key. Distinct keys give unrelated streams.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * stream.size());
    const auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto s : stream) {
        push(s);
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Stream tags keep the generators used by different components apart.
enum class RngStream : std::uint64_t {
    ModelTaus = 1,
    ModelWeights = 2,
    Shuffle = 3,
    Restart = 4,
    SynthFeatures = 5,
    SynthNoise = 6,
};

inline std::uint64_t tag(RngStream s) { return static_cast<std::uint64_t>(s); }

}  // namespace mds
