#include "latlab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace latlab {

// Stafford variant 13 of the splitmix64 finalizer.
static inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(uint64_t seed, uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    // Derive a per-stream key so (seed, stream_id) pairs index disjoint
    // splitmix sequences.
    key_ = mix64(mix64(seed + 0x9E3779B97F4A7C15ULL) ^ mix64(stream_id + 0xD1B54A32D192ED03ULL));
}

RngStream make_rng(uint64_t seed, uint64_t stream_id) { return RngStream(seed, stream_id); }

uint64_t RngStream::next_u64() {
    uint64_t z = key_ + counter_ * 0x9E3779B97F4A7C15ULL;
    ++counter_;
    return mix64(z);
}

double RngStream::next_uniform() {
    // 53-bit mantissa shifted into (0,1); +0.5 keeps 0 out of the range so the
    // inverse CDF stays finite.
    const uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() { return inverse_normal_cdf(next_uniform()); }

uint64_t RngStream::next_below(uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
    // Multiply-shift mapping; bias is negligible for bounds << 2^64 and the
    // mapping stays a pure function of the counter.
    const uint64_t x = next_u64();
    return static_cast<uint64_t>((static_cast<unsigned __int128>(x) * bound) >> 64);
}

Tensor sample_standard_normal(RngStream& rng, const std::vector<int64_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("sample_standard_normal: empty shape");
    for (int64_t d : shape) {
        if (d < 1) throw std::invalid_argument("sample_standard_normal: dims must be >= 1");
    }
    Tensor t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.next_normal();
    return t;
}

// Wichura (1988), algorithm AS 241, PPND16.
double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -v : v;
}

} // namespace latlab
