#include "gonet/rng.hpp"

#include <cmath>

#include "gonet/common.hpp"

namespace gonet {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

Rng Rng::stream(std::string_view name) const {
    std::uint64_t tag = fnv1a64(name.data(), name.size());
    return Rng(mix64(seed_ ^ tag));
}

Rng Rng::fork(std::uint64_t k) const {
    return Rng(mix64(seed_ ^ (k * kGolden + 1)));
}

std::uint64_t Rng::next_u64() {
    state_ += kGolden;
    return mix64(state_);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    while (u1 <= 0.0) u1 = next_uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * M_PI * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    // Modulo bias is < n / 2^64, negligible for the sizes used here.
    return next_u64() % n;
}

}  // namespace gonet
