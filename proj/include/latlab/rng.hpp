#pragma once

#include <cstdint>

#include "latlab/tensor.hpp"

namespace latlab {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream_id, counter). Streams with distinct ids are independent,
/// so per-sample / per-purpose streams can be split freely without any
/// ordering concerns.
class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream_id);

    uint64_t next_u64();
    double next_uniform();   // open interval (0,1)
    double next_normal();    // standard normal via inverse CDF, one counter tick per draw
    uint64_t next_below(uint64_t bound);  // uniform in [0, bound)

    uint64_t seed() const { return seed_; }
    uint64_t stream_id() const { return stream_id_; }
    uint64_t counter() const { return counter_; }
    void set_counter(uint64_t c) { counter_ = c; }

private:
    uint64_t seed_ = 0;
    uint64_t stream_id_ = 0;
    uint64_t counter_ = 0;
    uint64_t key_ = 0;
};

RngStream make_rng(uint64_t seed, uint64_t stream_id);

/// Tensor of i.i.d. standard normal draws; advances the stream by the number
/// of elements. Zero-size shapes are rejected.
Tensor sample_standard_normal(RngStream& rng, const std::vector<int64_t>& shape);

/// Inverse of the standard normal CDF (Wichura's algorithm, ~1e-15 relative
/// accuracy). Input must lie in (0,1).
double inverse_normal_cdf(double p);

} // namespace latlab
