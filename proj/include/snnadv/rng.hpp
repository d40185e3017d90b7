#pragma once

#include <cstdint>

#include "snnadv/tensor.hpp"

namespace snnadv {

// Splittable counter-based generator. A stream is identified by
// (seed, stream_id); the same pair always replays the same sequence,
// independent of platform and of any other stream. Value semantics:
// copy a stream to replay it, child() to fork an independent one.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();
    double next_uniform();   // [0, 1)
    double next_gaussian();  // standard normal, Box-Muller
    std::uint64_t next_below(std::uint64_t n);  // unbiased draw in [0, n)

    // Derives the i-th child stream: same seed, stream id mixed from
    // (this stream id, i). Children are pairwise distinct by construction.
    SeededRng child(std::uint64_t i) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t state_ = 0;
    std::uint64_t gamma_ = 0;  // odd increment derived from the stream id
};

Tensor rng_uniform(SeededRng& rng, Shape shape);
Tensor rng_gaussian(SeededRng& rng, Shape shape);

}  // namespace snnadv
