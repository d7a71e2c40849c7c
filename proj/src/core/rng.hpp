#pragma once

#include <cstdint>

namespace lsad {

/// Deterministic 64-bit stream (splitmix64 walk) with Box-Muller normals.
/// Streams derived from distinct (trial, purpose) pairs are independent;
/// identical inputs always reproduce the identical draw sequence.
class RngStream {
public:
    RngStream() = default;
    explicit RngStream(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform in the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal();

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t trial_index,
                        std::uint32_t purpose_tag);

/// Purpose tags used by the Monte Carlo harness.
enum : std::uint32_t {
    kPurposeCalibration = 0,
    kPurposeValidation = 1,
    kPurposePdTrial = 2,
    kPurposePfaSweep = 3,
    kPurposeEmTrace = 4,
};

}  // namespace lsad
