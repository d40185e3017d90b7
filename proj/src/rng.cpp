#include "snnadv/rng.hpp"

#include <cmath>
#include <numbers>

namespace snnadv {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    state_ = mix64(seed + kGolden);
    gamma_ = mix64(stream_id ^ (kGolden * (stream_id + 1))) | 1ull;
}

std::uint64_t SeededRng::next_u64() {
    state_ += gamma_;
    return mix64(state_);
}

double SeededRng::next_uniform() {
    // 53 high bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_gaussian() {
    // Box-Muller on two fresh uniforms; u1 shifted into (0, 1].
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
    if (n == 0) throw ValueError("next_below(0)");
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

SeededRng SeededRng::child(std::uint64_t i) const {
    return SeededRng(seed_, mix64(stream_id_ + kGolden * (i + 1)));
}

Tensor rng_uniform(SeededRng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_uniform();
    return t;
}

Tensor rng_gaussian(SeededRng& rng, Shape shape) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_gaussian();
    return t;
}

}  // namespace snnadv
