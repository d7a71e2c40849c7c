#include "rng.hpp"

#include <cmath>

namespace lsad {

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                        std::uint32_t purpose_tag) {
    std::uint64_t s = RngStream::mix(master_seed + 0x9E3779B97F4A7C15ull);
    s = RngStream::mix(s ^ (trial_index * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull));
    s = RngStream::mix(s ^ (static_cast<std::uint64_t>(purpose_tag) * 0xD6E8FEB86659FD93ull + 1));
    return RngStream(s);
}

}  // namespace lsad
