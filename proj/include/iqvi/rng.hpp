#pragma once

#include <cstdint>

namespace iqvi {

/// Philox4x32-10 counter-based generator. Substreams are carved out of the
/// 128-bit counter space: the high 64 bits hold the stream id, the low 64
/// bits count draws, so per-path streams are disjoint by construction and
/// results do not depend on how paths are scheduled across threads.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal via Box-Muller; consumes uniforms in pairs.
    double gaussian();

    static const char* algorithm() { return "philox4x32-10"; }

private:
    void refill();
    std::uint32_t next_u32();

    std::uint32_t key_[2];
    std::uint32_t counter_[4];
    std::uint32_t block_[4];
    int block_pos_ = 4;
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

} // namespace iqvi
