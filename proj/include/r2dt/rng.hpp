#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace r2dt {

using Rng = std::mt19937_64;

/// Independent stream keyed by a tuple such as (seed, scenario, replicate,
/// purpose). Keys are spread through std::seed_seq, so nearby tuples give
/// unrelated generator states.
inline Rng make_stream(std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * keys.size());
    for (std::uint64_t k : keys) {
        words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

/// Folds a key tuple into one 64-bit seed (splitmix64 finaliser per step).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::uint64_t k : keys) {
        std::uint64_t z = h ^ (k + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        h = z ^ (z >> 31);
    }
    return h;
}

/// Stream purposes, used as the final key of make_stream.
enum class StreamPurpose : std::uint64_t { Outcomes = 1, Mcmc = 2, LiveTrial = 3 };

}  // namespace r2dt
