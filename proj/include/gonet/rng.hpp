#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gonet {

// Seedable counter-based generator (splitmix64). The state advances by a
// fixed increment per draw and the output is a bijective mix of the state,
// so the stream is reproducible from (seed, draw index) in any language.
// Named sub-streams ("init", "dropout", "shuffle", ...) are derived from the
// construction seed and are independent of draws taken from the parent.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Derives an independent stream keyed by name.
    Rng stream(std::string_view name) const;
    // Derives an independent stream keyed by index (e.g. one per epoch).
    Rng fork(std::uint64_t k) const;

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 53 random bits.
    double next_uniform();
    // Standard normal via Box-Muller; pairs are cached so draw counts stay
    // deterministic.
    double next_normal();
    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace gonet
