#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>

namespace sbp {

// Deterministic RNG wrapper. Sampling helpers avoid std::*_distribution for
// integer and unit-interval draws so that results depend only on the engine's
// output sequence, not on the standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Derives an independent stream from a master seed and a list of tags
    // (phase indices, rank ids, worker ids, ...). Identical tags yield an
    // identical stream.
    static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        std::vector<std::uint32_t> words;
        words.push_back(static_cast<std::uint32_t>(seed));
        words.push_back(static_cast<std::uint32_t>(seed >> 32));
        for (std::uint64_t t : tags) {
            words.push_back(static_cast<std::uint32_t>(t));
            words.push_back(static_cast<std::uint32_t>(t >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        Rng rng(0);
        rng.engine_.seed(seq);
        return rng;
    }

    // Collapses a tag list into a single derived seed (for child runs that
    // need their own master seed).
    static std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
        Rng rng = stream(seed, tags);
        return rng.next();
    }

    std::uint64_t next() { return engine_(); }

    // Uniform double in [0, 1): 53 random mantissa bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling keeps the draw exact.
    std::int64_t below(std::int64_t n) {
        if (n <= 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return static_cast<std::int64_t>(x % un);
    }

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace sbp
