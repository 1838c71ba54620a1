#include "iqvi/rng.hpp"

#include <cmath>

namespace iqvi {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}
inline std::uint32_t mullo(std::uint32_t a, std::uint32_t b) { return a * b; }

} // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) {
    key_[0] = static_cast<std::uint32_t>(seed);
    key_[1] = static_cast<std::uint32_t>(seed >> 32);
    counter_[0] = 0;
    counter_[1] = 0;
    counter_[2] = static_cast<std::uint32_t>(stream);
    counter_[3] = static_cast<std::uint32_t>(stream >> 32);
}

void Philox::refill() {
    std::uint32_t c0 = counter_[0], c1 = counter_[1], c2 = counter_[2], c3 = counter_[3];
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0 = mulhi(kPhiloxM0, c0), lo0 = mullo(kPhiloxM0, c0);
        std::uint32_t hi1 = mulhi(kPhiloxM1, c2), lo1 = mullo(kPhiloxM1, c2);
        std::uint32_t n0 = hi1 ^ c1 ^ k0;
        std::uint32_t n1 = lo1;
        std::uint32_t n2 = hi0 ^ c3 ^ k1;
        std::uint32_t n3 = lo0;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    block_[0] = c0;
    block_[1] = c1;
    block_[2] = c2;
    block_[3] = c3;
    block_pos_ = 0;

    // 64-bit draw counter in the low words; the stream id words are never
    // touched, keeping substreams disjoint.
    if (++counter_[0] == 0) ++counter_[1];
}

std::uint32_t Philox::next_u32() {
    if (block_pos_ == 4) refill();
    return block_[block_pos_++];
}

double Philox::uniform() {
    std::uint32_t lo = next_u32();
    std::uint32_t hi = next_u32();
    std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double Philox::gaussian() {
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double phi = 2.0 * M_PI * u2;
    cached_gaussian_ = r * std::sin(phi);
    has_cached_gaussian_ = true;
    return r * std::cos(phi);
}

} // namespace iqvi
